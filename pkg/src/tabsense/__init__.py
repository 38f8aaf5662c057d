"""tabsense: train and compare tabular models, pick the best, and explain
it with eFAST Sobol indices plus LIME / Kernel SHAP local explanations,
over an HTTP API, a CLI, and a browser workbench."""

__version__ = "0.1.0"

from . import data, datasets, evaluation, explain, gsa, losses, models  # noqa: F401
