"""Continual-learning benchmark toolkit: SOM-gated MLP and baselines."""

from ._core import (
    MlpModel,
    SomSchedule,
    SomState,
    apply_permutation,
    decayed_params,
    gem_project,
    gen_permutation,
    init_mlp,
    init_som,
    matvec,
    mnist_available,
    rotate_bilinear,
    run_experiment,
    softmax_xent,
    som_update_step,
    task_angles,
)

__all__ = [
    "MlpModel",
    "SomSchedule",
    "SomState",
    "apply_permutation",
    "decayed_params",
    "gem_project",
    "gen_permutation",
    "init_mlp",
    "init_som",
    "matvec",
    "mnist_available",
    "rotate_bilinear",
    "run_experiment",
    "softmax_xent",
    "som_update_step",
    "task_angles",
]
