import logging
import time
from collections import namedtuple

logger = logging.getLogger(__name__)

CheckResult = namedtuple('CheckResult', ['label', 'passed', 'detail'])


class GenericSuite:
    """
    A named group of numerical property checks.

    Subclasses set ``name`` and ``description`` and implement ``check``.
    Suites with ``quick = False`` are skipped by ``verify --quick``.
    """

    name = None
    description = ''
    quick = True

    def __init__(self):
        self._validate_options()

    def _validate_options(self):
        if not self.name:
            raise AttributeError('%s must define a name' % self.__class__.__name__)

    def check(self, quick=True):
        '''
        Returns a list of ``(label, passed, detail)`` results.  Overwrite
        this method in every suite.
        '''
        raise NotImplementedError

    def result(self, label, passed, detail=''):
        return CheckResult(label, bool(passed), detail)

    def run(self, quick=True):
        started = time.monotonic()
        try:
            results = list(self.check(quick))
        except Exception as exc:
            logger.exception('suite %s raised', self.name)
            results = [self.result('%s raised' % self.name, False, repr(exc))]
        logger.info(
            'suite %s: %d/%d passed in %.1fs',
            self.name,
            sum(r.passed for r in results),
            len(results),
            time.monotonic() - started,
        )
        return results
