from diffusion.ensemble import ForecastEnsemble, read_ensembles, write_ensembles
from diffusion.process import (
    DiffusionSample,
    diffusion_loss,
    forward_sample,
    reverse_step,
    sample,
    training_loss,
    trajectory_rng,
)
from diffusion.schedule import NoiseSchedule, cosine_schedule, linear_schedule, make_schedule

__all__ = [
    "DiffusionSample",
    "ForecastEnsemble",
    "NoiseSchedule",
    "cosine_schedule",
    "diffusion_loss",
    "forward_sample",
    "linear_schedule",
    "make_schedule",
    "read_ensembles",
    "reverse_step",
    "sample",
    "training_loss",
    "trajectory_rng",
    "write_ensembles",
]
