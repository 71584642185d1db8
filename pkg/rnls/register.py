from .suites import GenericSuite


class RegistrationError(Exception):
    """Exception thrown when registration of a verification suite goes wrong."""


class SuiteRegistrySingleton(type):
    def __init__(cls, name, bases, dict):
        super().__init__(name, bases, dict)
        cls.instance = None

    def __call__(cls, *args, **kw):
        if cls.instance is None:
            cls.instance = super(SuiteRegistrySingleton, cls).__call__(*args, **kw)

        return cls.instance


class SuiteRegistry(metaclass=SuiteRegistrySingleton):
    def __init__(self, *args, **kwargs):
        """Initializes the suite registry."""
        self._registered_suites = {}

        super().__init__(*args, **kwargs)

    def register(self, suite_class):
        """Registers a GenericSuite subclass under its name"""
        if not (isinstance(suite_class, type) and issubclass(suite_class, GenericSuite)):
            msg = 'suite_class must subclass GenericSuite, found %s' % (suite_class,)
            raise RegistrationError(msg)
        instance = suite_class()
        if instance.name in self._registered_suites:
            msg = "{} has already been registered.".format(instance.name)
            raise RegistrationError(msg)
        self._registered_suites[instance.name] = instance
        return suite_class

    def unregister(self, name):
        """Unregister the suite called ``name``"""
        try:
            del self._registered_suites[name]
        except KeyError:
            msg = "%s has not been registered." % name
            raise RegistrationError(msg)

    def get_suite(self, name):
        try:
            return self._registered_suites[name]
        except KeyError:
            msg = "%s has not been registered." % name
            raise RegistrationError(msg)

    def suites(self, quick=False):
        """Registered suites in registration order; ``quick`` keeps quick ones only"""
        return [s for s in self._registered_suites.values() if s.quick or not quick]
