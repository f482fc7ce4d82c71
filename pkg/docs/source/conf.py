# -*- coding: utf-8 -*-
#
# Sphinx configuration of the gradient_enhanced_pce documentation.
# Build with ``sphinx-build -b html docs/source docs/_build/html`` from the repository root.

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

project = u'gradient-enhanced-pce'
copyright = u'2019, The Gradient-Enhanced PCE Authors'
author = u'The Gradient-Enhanced PCE Authors'
version = u'1.1'
release = u'1.1.0'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.napoleon',
    'sphinx.ext.viewcode',
    'recommonmark',
]

# Heavy backends are not needed to render signatures and docstrings.
autodoc_mock_imports = ['torch', 'spgl1']
autodoc_member_order = 'bysource'

source_suffix = ['.rst', '.md']
master_doc = 'index'
exclude_patterns = [u'_build']

html_theme = 'sphinx_rtd_theme'
html_theme_options = {'collapse_navigation': False}
htmlhelp_basename = 'gradient-enhanced-pce-doc'
