from setuptools import setup, find_packages
import os

# Dynamically calculate the version based on rnls.__version__.
version = __import__('rnls').__version__

tests_require = [
    'hypothesis>=6.0',
]

install_requires = [
    'django>=3.2',
    'numpy>=1.21',
    'scipy>=1.8',
    'tomli>=1.1; python_version < "3.11"',
    'tomli-w>=1.0',
]

setup(
    name='rnls',
    version=version,
    description='Rotational nonlinear Schrodinger simulator with blowup analysis and verification suites',
    long_description=open('README.rst').read()
    + '\n'
    + open(os.path.join('docs', 'history.rst')).read(),
    classifiers=[
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    keywords='nls schrodinger blowup moving mesh rotation harmonic potential',
    license='BSD',
    packages=find_packages('.', exclude=('tests', 'tests.*')),
    include_package_data=True,
    tests_require=tests_require,
    extras_require={'test': tests_require},
    test_suite='runtests.runtests',
    install_requires=install_requires,
    entry_points={'console_scripts': ['rnls = rnls.cli:main']},
    zip_safe=False,
)
