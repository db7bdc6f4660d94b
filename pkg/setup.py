from setuptools import setup, find_packages

VERSION = '0.1.0'

setup(
  name = 'hyperadapt',
  packages=find_packages(),
  version = VERSION,
  license='MIT',
  description = 'Hyperbolic radius adjustment of frozen weight matrices with structured scaling operators',
  author = 'hyperadapt developers',
  keywords = ['HYPERBOLIC', 'POINCARE', 'MOBIUS', 'FINE-TUNING', 'ADAPTER', 'RADIUS'],
  python_requires='>=3.7',
  install_requires=["numpy>=1.17", "scipy"],   # numpy >= 1.17 for default_rng
  extras_require={
    'test': ["pytest", "hypothesis"],
  },
  entry_points={
    'console_scripts': ['hyperadapt=hyperadapt.cli.main:main'],
  },
  classifiers=[
    'Development Status :: 3 - Alpha',
    'Intended Audience :: Science/Research',
    'Topic :: Scientific/Engineering :: Mathematics',
    'License :: OSI Approved :: MIT License',
    'Programming Language :: Python :: 3.7',
  ],
)
