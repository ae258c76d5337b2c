from setuptools import setup, find_packages

setup(
    name='scherktools',
    version='1.0',
    description='Numerical construction of Scherk-like translators for mean curvature flow.',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
    ],
    keywords='mean-curvature-flow translators minimal-surfaces pde',
    packages=find_packages(exclude=['contrib', 'docs', 'tests', 'examples', 'examples.*']),
    python_requires='>=3.9',
    install_requires=[
        'numpy',
        'scipy>=1.12',
        'tomli; python_version<"3.11"',
    ],
    extras_require={
        'testing': ['pytest'],
    },
    test_suite='scherktools',
    entry_points={
        'console_scripts': [
            'scherktools=scherktools.console_app:main',
        ],
    },
)
