# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# Add propclass source to import path
import sys
from pathlib import Path

sys.path.insert(0, str(Path("..", "..", "src").resolve()))

# -- Project information -----------------------------------------------------

project = "propclass"
copyright = "2025, propclass developers"  # noqa: A001
author = "propclass developers"
version = "0.1"
release = "0.1.0dev1"

# -- General configuration ---------------------------------------------------

needs_sphinx = "8.1"
extensions = [
    "myst_parser",
    "sphinx.ext.autodoc",
    "sphinx_autodoc_typehints",
]
myst_links_external_new_tab = True

source_suffix = [".rst", ".md"]
exclude_patterns = []

language = "en"
html_show_sphinx = False
nitpicky = True  # extra warnings

# -- HTML output -------------------------------------------------------------

html_theme = "pydata_sphinx_theme"
html_theme_options = {
    "show_nav_level": 1,
    "navigation_depth": 4,
    "show_toc_level": 2,
}
