import os
from unittest import mock

from django.test.testcases import SimpleTestCase
from django.test.utils import override_settings

from rnls.conf import settings


class GetSettingTestCase(SimpleTestCase):
    def test_default(self):
        with mock.patch.dict(os.environ, {}, clear=False):
            os.environ.pop('RNLS_NOT_A_SETTING', None)
            self.assertEqual(settings.get_setting('RNLS_NOT_A_SETTING', 3.5, float), 3.5)

    def test_environment(self):
        with mock.patch.dict(os.environ, {'RNLS_NOT_A_SETTING': '0.125'}):
            self.assertEqual(settings.get_setting('RNLS_NOT_A_SETTING', 1.0, float), 0.125)

    def test_empty_environment_value_falls_back(self):
        with mock.patch.dict(os.environ, {'RNLS_NOT_A_SETTING': ''}):
            self.assertEqual(settings.get_setting('RNLS_NOT_A_SETTING', 7, int), 7)

    @override_settings(RNLS_NOT_A_SETTING=9)
    def test_django_settings_win(self):
        with mock.patch.dict(os.environ, {'RNLS_NOT_A_SETTING': '2'}):
            self.assertEqual(settings.get_setting('RNLS_NOT_A_SETTING', 1, int), 9)

    def test_window_pair(self):
        with mock.patch.dict(os.environ, {'RNLS_NOT_A_SETTING': '1e-4,1e-2'}):
            window = settings.get_setting('RNLS_NOT_A_SETTING', None, settings._pair)
        self.assertEqual(window, (1e-4, 1e-2))


class ThreadsTestCase(SimpleTestCase):
    def test_request_wins(self):
        self.assertEqual(settings.threads(4), 4)

    @override_settings(RNLS_THREADS=3)
    def test_setting(self):
        self.assertEqual(settings.threads(), 3)

    @override_settings(RNLS_THREADS=0)
    def test_at_least_one(self):
        self.assertEqual(settings.threads(), 1)
        self.assertEqual(settings.threads(-2), 1)
