from ._brachi import (
    BrachiError,
    Model,
    Solution,
    conservation_report,
    correspondence_report,
    discrete_minimize,
    indices,
    integrate_brachistochrone,
    model_names,
    shoot,
    survey,
)

__all__ = [
    "BrachiError",
    "Model",
    "Solution",
    "conservation_report",
    "correspondence_report",
    "discrete_minimize",
    "indices",
    "integrate_brachistochrone",
    "model_names",
    "shoot",
    "survey",
]
