# Configuración de Sphinx para la documentación del simulador GSC.

import os
import sys
sys.path.insert(0, os.path.abspath('../../'))

from gsc import __version__  # noqa: E402

project = 'Simulador GSC'
copyright = '2025, David Clemente'
author = 'David Clemente'
version = '.'.join(__version__.split('.')[:2])
release = __version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
]

# Docstrings en estilo Google (Args / Returns / Raises)
napoleon_google_docstring = True
napoleon_numpy_docstring = False
autodoc_member_order = 'bysource'
autodoc_default_options = {
    'members': True,
    'show-inheritance': True,
}

templates_path = ['_templates']
exclude_patterns = []

language = 'es'

html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']
html_title = f'Simulador GSC {release}'
