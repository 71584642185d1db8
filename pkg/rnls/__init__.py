__version__ = '0.1.0'


class _SuiteRegistryProxy:
    """Proxy the SuiteRegistry()

    The registry is created on first use so that importing rnls does not pull
    in the built-in suites.
    """

    _registry = None

    def _ensure_obj(self):
        if _SuiteRegistryProxy._registry is None:
            from .register import SuiteRegistry

            _SuiteRegistryProxy._registry = SuiteRegistry()

    def __getattr__(self, attribute):
        self._ensure_obj()
        return getattr(_SuiteRegistryProxy._registry, attribute)

    def __setattr__(self, attribute, value):
        self._ensure_obj()
        return setattr(_SuiteRegistryProxy._registry, attribute, value)


verification = _SuiteRegistryProxy()
