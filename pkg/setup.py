from setuptools import setup
setup(
  name = 'partitiontools',
  packages = ['partitiontools'],
  version = '0.1.0',
  license='MIT',
  description = 'Weighted-perimeter optimal partitions on grids, with an exact oracle and regularity diagnostics',
  keywords = ['Partitions', 'Perimeter', 'Landscape function', 'Potts'],
  python_requires='>=3.8',
  install_requires=[
          'numpy>=1.20',
          'pandas>=1.5',
          'scipy>=1.12',
          'scikit-image>=0.19',
      ],
  extras_require={
          'test': ['pytest', 'hypothesis'],
      },
  entry_points={
          'console_scripts': ['partitiontools=partitiontools.cli:main'],
      },
  classifiers=[
    'Development Status :: 3 - Alpha',
    'Intended Audience :: Science/Research',
    'Topic :: Scientific/Engineering :: Mathematics',
    'License :: OSI Approved :: MIT License',
    'Programming Language :: Python :: 3',
  ],
)
