from .render import render
from .spec import (FigureSpec, MissingInputError, SchemaMismatchError,
                   STYLE, standard_spec)

__all__ = ["FigureSpec", "MissingInputError", "SchemaMismatchError",
           "STYLE", "render", "standard_spec"]
