from . import (  # noqa: F401
    cli,
    dataset,
    distfit,
    errors,
    generator,
    manifest,
    parallel,
    permutation_test,
    power,
    roc,
    svg_plot,
)
