#!/usr/bin/env python3
"""
Strategy sweep scenario - every training strategy across model sizes, data sizes and seeds
Fits scaling laws per strategy, compares strategies on the frontier and
turns the fitted joint laws into budget allocations
"""

import argparse
import logging
import os
from datetime import datetime
from typing import Dict, List, Optional, Tuple

import pandas as pd

from analysis.frontier import PerfPoint, estimate_omega0, extract_non_dominated
from analysis.stats_analyzer import StatsAnalyzer
from experiments.results import data_size_law, joint_law, model_size_law, save_results
from pipeline.files import load_config
from pipeline.law_store import LawDocument, persist_law
from pipeline.records import append_records, record_from_run
from scaling.budget import CostModel, allocate
from scaling.errors import ScalingError
from simlab.task import TaskConfig, generate_task
from simlab.trainer import RunResult, TrainConfig, pilot_omega0, train

logger = logging.getLogger(__name__)

# strategies whose strategy_mix sets the share of robustness-oriented samples
VARIANT_STRATEGIES = ("hard_negative", "denoising", "adversarial")
JOINT_ASPECTS = {'robustness': 'robustness_ce', 'effectiveness': 'effectiveness_ce'}


class StrategySweep:
    """Strategy sweep scenario"""

    def __init__(self, config_file: str, results_dir: str = 'results'):
        self.config = load_config(config_file)
        self.results_dir = results_dir
        self.analyzer = StatsAnalyzer(results_dir)
        self.timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        self.results = {
            'test_type': 'strategy_sweep',
            'timestamp': datetime.now().isoformat(),
            'runs': []
        }
        self.run_results: List[Tuple[str, RunResult]] = []

    def arms(self, sweep_config: dict) -> List[Tuple[str, str, Optional[float]]]:
        """
        (label, strategy, strategy_mix) per trained arm

        With a `variants` mapping, each mix-driven strategy runs once per
        variant (e.g. balanced, light) under the label strategy-variant.
        """
        variants = sweep_config.get('variants') or {}
        arms = []
        for strategy in sweep_config['strategies']:
            if variants and strategy in VARIANT_STRATEGIES:
                arms.extend((f"{strategy}-{name}", strategy, float(mix))
                            for name, mix in variants.items())
            else:
                arms.append((strategy, strategy, None))
        return arms

    def run_test(self, records_file: Optional[str] = None) -> Dict:
        """Execute the sweep over arms x model sizes x data sizes x seeds"""
        sweep_config = self.config['scenarios']['strategy_sweep']

        arms = self.arms(sweep_config)
        sizes = sweep_config['train_pairs']
        seeds = sweep_config['seeds']
        task_settings = dict(sweep_config.get('task', {}))
        dims = sweep_config.get('encode_dims') or [task_settings.get('encode_dim',
                                                                     TaskConfig.encode_dim)]
        train_settings = dict(sweep_config.get('train', {}))

        logger.info("=" * 60)
        logger.info("STRATEGY SWEEP: %s", ", ".join(label for label, _, _ in arms))
        logger.info("Encode dims: %s, train pairs: %s, seeds: %s", dims, sizes, seeds)
        logger.info("=" * 60)

        omega = None
        if any(strategy == 'pareto' for _, strategy, _ in arms) \
                and 'omega0' not in train_settings:
            pilot_task = generate_task(TaskConfig.from_config(
                {**task_settings, 'encode_dim': max(dims), 'train_pairs': max(sizes),
                 'seed': seeds[0]}))
            omega = pilot_omega0(pilot_task, TrainConfig.from_config(
                {**train_settings, 'seed': seeds[0]}))
            self.results['omega0'] = {'omega0': omega.omega0, 'ratio': omega.ratio,
                                      'knee': omega.knee.label}

        for seed in seeds:
            for dim in dims:
                for pairs in sizes:
                    task = generate_task(TaskConfig.from_config(
                        {**task_settings, 'encode_dim': dim, 'train_pairs': pairs,
                         'seed': seed}))
                    for label, strategy, mix in arms:
                        settings = {**train_settings, 'strategy': strategy, 'seed': seed}
                        if mix is not None:
                            settings['strategy_mix'] = mix
                        if strategy == 'pareto' and omega is not None:
                            settings.update(omega0=omega.omega0, omega_target=omega.ratio)
                        result = train(task, TrainConfig.from_config(settings))
                        self.run_results.append((label, result))
                        self.results['runs'].append({
                            **result.to_dict(trajectories=False), 'strategy': label,
                            'base_strategy': strategy, 'encode_dim': dim,
                            'train_pairs': pairs})

        self.calculate_metrics()

        if records_file:
            append_records(records_file,
                           [record_from_run(r, label) for label, r in self.run_results])
            logger.info("✓ Records appended to %s", records_file)

        save_results(self.results, self.results_dir,
                     "strategy_sweep_results_{}.json".format(self.timestamp))
        return self.results

    def fit_joint_laws(self, runs: pd.DataFrame) -> Dict[str, Dict]:
        """Joint laws per arm over the (model size, train pairs) grid, persisted as law files"""
        laws: Dict[str, Dict] = {}
        if runs['model_size'].nunique() < 2 or runs['train_pairs'].nunique() < 2:
            return laws
        for label, group in runs.groupby('strategy', sort=True):
            fitted = {}
            for aspect, column in JOINT_ASPECTS.items():
                report = joint_law(group, column)
                if report is None:
                    continue
                document = LawDocument.from_fit(report, 'joint', aspect,
                                                f"strategy sweep ({label})")
                path = os.path.join(self.results_dir,
                                    f"law_joint_{label}_{aspect}_{self.timestamp}.json")
                persist_law(document, path)
                fitted[aspect] = {**document.coefficients, 'r_squared': report.r_squared,
                                  'path': path, 'law': report.law}
            if fitted:
                laws[label] = fitted
        return laws

    def allocate_budgets(self, laws: Dict[str, Dict]) -> Dict[str, Dict]:
        """Budget allocations from each arm's fitted joint laws"""
        budget_config = self.config['scenarios']['strategy_sweep'].get('budget')
        if not budget_config:
            return {}
        cm = CostModel.from_config(budget_config.get('cost_model', {}))
        weight = float(budget_config.get('weight', 0.5))
        allocations: Dict[str, Dict] = {}
        for label, fitted in laws.items():
            if set(fitted) != set(JOINT_ASPECTS):
                continue
            allocations[label] = {}
            for budget in budget_config.get('budgets', []):
                try:
                    allocation = allocate(float(budget), fitted['robustness']['law'],
                                          fitted['effectiveness']['law'], cm, weight)
                except ScalingError as e:
                    logger.warning("✗ %s: no allocation for $%s: %s", label, budget, e)
                    continue
                allocations[label][str(budget)] = allocation.to_dict()
        return allocations

    def calculate_metrics(self):
        """Calculate aggregate metrics"""
        runs = pd.DataFrame(self.results['runs'])

        if runs.empty:
            logger.warning("No runs to analyze")
            return

        metrics = {'data_size_laws': {}, 'model_size_laws': {}, 'comparisons': {}}
        largest_model = runs[runs['model_size'] == runs['model_size'].max()]
        for label, group in largest_model.groupby('strategy', sort=True):
            metrics['data_size_laws'][label] = {
                'ood': data_size_law(group, 'ood_ce'),
                'adversarial': data_size_law(group, 'adversarial_ce'),
            }
        if runs['model_size'].nunique() >= 3:
            for label, group in runs.groupby('strategy', sort=True):
                metrics['model_size_laws'][label] = {
                    'robustness': model_size_law(group, 'robustness_ce'),
                    'effectiveness': model_size_law(group, 'effectiveness_ce'),
                }

        laws = self.fit_joint_laws(runs)
        metrics['joint_laws'] = {
            label: {aspect: {k: v for k, v in fit.items() if k != 'law'}
                    for aspect, fit in fitted.items()}
            for label, fitted in laws.items()
        }
        metrics['allocations'] = self.allocate_budgets(laws)

        largest = largest_model[largest_model['train_pairs'] == runs['train_pairs'].max()]
        means = largest.groupby('strategy', sort=True)[['robustness_ce', 'effectiveness_ce']].mean()
        points = [PerfPoint(row.robustness_ce, row.effectiveness_ce, label)
                  for label, row in means.iterrows()]
        frontier = extract_non_dominated(points)
        estimate = estimate_omega0(frontier)
        metrics['frontier'] = frontier.labels
        metrics['knee'] = estimate.knee.label

        if 'standard' in set(runs['strategy']):
            for label in sorted(set(runs['strategy']) - {'standard'}):
                a, b = self.analyzer.paired_series(runs, label, 'standard', 'robustness_ce')
                if len(a) >= 2:
                    metrics['comparisons'][label] = self.analyzer.compare_strategies(a, b)

        self.results['metrics'] = metrics

        logger.info("=" * 60)
        logger.info("TEST RESULTS:")
        logger.info("=" * 60)
        for label, row in means.iterrows():
            logger.info("%-22s robustness %.4f  effectiveness %.4f",
                        label, row.robustness_ce, row.effectiveness_ce)
        logger.info("Frontier: %s (knee %s)", ", ".join(frontier.labels), estimate.knee.label)
        for label, result in metrics['comparisons'].items():
            logger.info("%s vs standard: median robustness diff %+.4f (%s)", label,
                        result['median_difference'], result['effect_size'])
        for label, by_budget in metrics['allocations'].items():
            for budget, allocation in by_budget.items():
                logger.info("%s $%s: model %d, data %d", label, budget,
                            allocation['model_size'], allocation['data_size'])
        logger.info("=" * 60)


def main():
    parser = argparse.ArgumentParser(description='Strategy Sweep')
    parser.add_argument('--config', default='configs/experiment_config.json',
                        help='Configuration file')
    parser.add_argument('--results-dir', default='results',
                        help='Results directory')
    parser.add_argument('--records', help='Experiment-record CSV to append to')

    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format='%(message)s')

    test = StrategySweep(args.config, args.results_dir)
    test.run_test(args.records)


if __name__ == '__main__':
    main()
