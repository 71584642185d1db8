from django.test.testcases import SimpleTestCase

from rnls import verification
from rnls.register import RegistrationError, SuiteRegistry
from rnls.suites import CheckResult, GenericSuite
from tests.utils import setup_verification, teardown_verification


class PassingSuite(GenericSuite):
    name = 'test-passing'
    description = 'always passes'

    def check(self, quick=True):
        return [self.result('truth', True, 'quick=%s' % quick)]


class SlowSuite(GenericSuite):
    name = 'test-slow'
    quick = False

    def check(self, quick=True):
        return [self.result('slow truth', 1)]


class BrokenSuite(GenericSuite):
    name = 'test-broken'

    def check(self, quick=True):
        raise ZeroDivisionError('boom')


class NamelessSuite(GenericSuite):
    pass


TEST_SUITES = [PassingSuite, SlowSuite, BrokenSuite]


class RegistrationTestCase(SimpleTestCase):
    def setUp(self):
        self.verification = setup_verification(TEST_SUITES)

    def tearDown(self):
        teardown_verification([s.name for s in TEST_SUITES])

    def test_registry_is_a_singleton(self):
        self.assertIs(SuiteRegistry(), SuiteRegistry())
        self.assertIs(verification.get_suite('test-passing'), SuiteRegistry().get_suite('test-passing'))

    def test_get_suite(self):
        suite = self.verification.get_suite('test-passing')
        self.assertIsInstance(suite, PassingSuite)

    def test_register_twice(self):
        with self.assertRaises(RegistrationError) as raised:
            self.verification.register(PassingSuite)
        self.assertEqual(str(raised.exception), 'test-passing has already been registered.')

    def test_register_returns_the_class(self):
        self.verification.unregister('test-passing')
        self.assertIs(self.verification.register(PassingSuite), PassingSuite)

    def test_register_requires_a_suite_class(self):
        self.assertRaises(RegistrationError, self.verification.register, object)
        self.assertRaises(RegistrationError, self.verification.register, PassingSuite())

    def test_suite_needs_a_name(self):
        self.assertRaises(AttributeError, self.verification.register, NamelessSuite)

    def test_unregister(self):
        self.verification.unregister('test-broken')
        self.assertRaises(RegistrationError, self.verification.get_suite, 'test-broken')
        self.assertRaises(RegistrationError, self.verification.unregister, 'test-broken')
        self.verification.register(BrokenSuite)

    def test_unknown_suite(self):
        with self.assertRaises(RegistrationError) as raised:
            self.verification.get_suite('no-such-suite')
        self.assertEqual(str(raised.exception), 'no-such-suite has not been registered.')

    def test_quick_selection(self):
        names = [s.name for s in self.verification.suites(quick=True)]
        self.assertIn('test-passing', names)
        self.assertNotIn('test-slow', names)
        self.assertIn('test-slow', [s.name for s in self.verification.suites()])

    def test_registration_order(self):
        names = [s.name for s in self.verification.suites()]
        positions = [names.index(s.name) for s in TEST_SUITES]
        self.assertEqual(positions, sorted(positions))


class SuiteRunTestCase(SimpleTestCase):
    def test_results(self):
        results = PassingSuite().run(quick=False)
        self.assertEqual(results, [CheckResult('truth', True, 'quick=False')])

    def test_results_are_booleans(self):
        self.assertIs(SlowSuite().run()[0].passed, True)

    def test_exceptions_become_failures(self):
        with self.assertLogs('rnls.suites', 'ERROR'):
            results = BrokenSuite().run()
        self.assertEqual(len(results), 1)
        self.assertFalse(results[0].passed)
        self.assertIn('boom', results[0].detail)

    def test_check_must_be_overridden(self):
        class Bare(GenericSuite):
            name = 'bare'

        self.assertRaises(NotImplementedError, Bare().check)


class BuiltinSuitesTestCase(SimpleTestCase):
    def test_registered_on_import(self):
        from rnls import checks

        names = [s.name for s in verification.suites()]
        for suite_class in checks.BUILTIN_SUITES:
            self.assertIn(suite_class.name, names)

    def test_registering_again_is_harmless(self):
        from rnls import checks

        before = len(verification.suites())
        checks.register_builtin_suites()
        self.assertEqual(len(verification.suites()), before)
