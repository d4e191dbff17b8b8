# Sphinx configuration for the ragfpy docs.
#
# API pages are generated by sphinx-autoapi straight from ../src, so the
# package and its numeric dependencies need not be importable here.
import re
from pathlib import Path

_init = Path(__file__).resolve().parent.parent / "src" / "ragfpy" / "__init__.py"
release = re.search(r'__version__ = "([^"]+)"', _init.read_text(encoding="utf-8")).group(1)
version = ".".join(release.split(".")[:2])

project = "ragfpy"
master_doc = "index"

extensions = [
    "autoapi.extension",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "sphinx.ext.intersphinx",
]

autoapi_type = "python"
autoapi_dirs = ["../src/ragfpy"]
autoapi_options = ["members", "undoc-members", "show-inheritance", "imported-members"]

# docstrings are numpy style
napoleon_google_docstring = False
napoleon_numpy_docstring = True

exclude_patterns = ["_build"]
pygments_style = "friendly"
html_theme = "sphinx_rtd_theme"

intersphinx_mapping = {
    "python": ("https://docs.python.org/3/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "pandas": ("https://pandas.pydata.org/docs/", None),
    "sklearn": ("https://scikit-learn.org/stable/", None),
    "httpx": ("https://www.python-httpx.org/", None),
}
