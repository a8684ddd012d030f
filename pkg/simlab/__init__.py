"""Synthetic dense-retrieval laboratory: task generation, shared linear encoder, attacks and training strategies."""

from simlab.attack import adversarial_perturb, attack_case_set
from simlab.encoder import EncoderParams, contrastive_loss, contrastive_loss_and_grad
from simlab.pareto import ParetoWeighting, pareto_weight_update
from simlab.task import Task, TaskConfig, generate_task
from simlab.trainer import STRATEGIES, RunResult, TrainConfig, pilot_omega0, train
