"""
Simple check list for a release, adapted from AllenNLP's setup.py.

To create the package for pypi.

1. Change the version in gradient_enhanced_pce/__init__.py and setup.py.

2. Commit these changes with the message: "Release: VERSION"

3. Add a tag in git to mark the release: "git tag VERSION -m'Adds tag VERSION for pypi' "
   Push the tag to git: git push --tags origin master
   Reports record `git describe` as their build identifier, so tag before running the studies of a release.

4. Build both the sources and the wheel. Do not change anything in setup.py between
   creating the wheel and the source distribution (obviously).

   For the wheel, run: "python setup.py bdist_wheel" in the top level directory.
   For the sources, run: "python setup.py sdist"
   You should now have a /dist directory with both .whl and .tar.gz source versions.

5. Run the slow test suite once on the release candidate: "pytest --runslow gradient_enhanced_pce/tests"
   and "gradient_enhanced_pce selftest".

6. Check that everything looks correct by uploading the package to the pypi test server:

   twine upload dist/* -r pypitest

   Check that you can install it in a virtualenv by running:
   pip install -i https://testpypi.python.org/pypi gradient-enhanced-pce

7. Upload the final version to actual pypi:
   twine upload dist/* -r pypi

"""
from io import open
from setuptools import find_packages, setup

setup(
    name="gradient_enhanced_pce",
    version="1.1.0",
    author="The Gradient-Enhanced PCE Authors",
    description="Sparse Hermite polynomial chaos expansions from values and gradients by l1-minimization",
    long_description=open("README.md", "r", encoding='utf-8').read(),
    long_description_content_type="text/markdown",
    keywords='uncertainty quantification polynomial chaos compressive sampling l1-minimization adjoint',
    license='Apache',
    packages=find_packages(exclude=["*.tests", "*.tests.*",
                                    "tests.*", "tests"]),
    install_requires=['torch>=1.9.0',
                      'numpy',
                      'scipy',
                      'spgl1',
                      'tqdm'],
    entry_points={
      'console_scripts': [
        "gradient_enhanced_pce=gradient_enhanced_pce.__main__:main",
      ]
    },
    python_requires='>=3.6.0',
    tests_require=['pytest'],
    classifiers=[
          'Intended Audience :: Science/Research',
          'License :: OSI Approved :: Apache Software License',
          'Programming Language :: Python :: 3',
          'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
