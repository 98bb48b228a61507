from setuptools import find_packages, setup

# metadata and dependencies live in setup.cfg
setup(
  package_dir={'': 'src'},
  packages=find_packages(where='src'),
)
