#!/usr/bin/env python3
#
# lrdtest documentation build configuration file.

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.todo",
    "sphinx.ext.viewcode",
    "sphinx.ext.autosummary",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
]

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"

project = "lrdtest"
copyright = "2024, lrdtest developers"
author = "lrdtest developers"

import lrdtest  # noqa: E402

version = lrdtest.__version__
release = version

exclude_patterns = []
pygments_style = "sphinx"
todo_include_todos = False

html_theme = "sphinx_rtd_theme"
htmlhelp_basename = "lrdtestdoc"

latex_documents = [
    (master_doc, "lrdtest.tex", "lrdtest Documentation", author, "manual")
]
man_pages = [(master_doc, "lrdtest", "lrdtest Documentation", [author], 1)]
