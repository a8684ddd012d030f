#!/usr/bin/env python3
"""
Annotation quality scenario - standard training on noisier and noisier labels
Fits a data-size law per annotation noise level against a pinned test collection
"""

import argparse
import logging
from datetime import datetime
from typing import Dict, List, Optional

import pandas as pd

from analysis.stats_analyzer import StatsAnalyzer
from experiments.results import data_size_law, save_results
from pipeline.files import load_config
from pipeline.records import append_records, record_from_run
from scaling.errors import DomainError
from simlab.task import TaskConfig, generate_task
from simlab.trainer import RunResult, TrainConfig, train

logger = logging.getLogger(__name__)


def noise_label(noise: float) -> str:
    return f"standard-noise{noise:g}"


class AnnotationSweep:
    """Annotation quality scenario"""

    def __init__(self, config_file: str, results_dir: str = 'results'):
        self.config = load_config(config_file)
        self.results_dir = results_dir
        self.analyzer = StatsAnalyzer(results_dir)
        self.results = {
            'test_type': 'annotation_sweep',
            'timestamp': datetime.now().isoformat(),
            'runs': []
        }
        self.run_results: List[RunResult] = []

    def run_test(self, records_file: Optional[str] = None) -> Dict:
        """Execute the sweep over noise levels x data sizes x seeds"""
        sweep_config = self.config['scenarios']['annotation_sweep']

        levels = sorted(float(n) for n in sweep_config['positive_noise'])
        sizes = sweep_config['train_pairs']
        seeds = sweep_config['seeds']
        task_settings = dict(sweep_config.get('task', {}))
        train_settings = {**sweep_config.get('train', {}), 'strategy': 'standard'}
        if not levels:
            raise DomainError("annotation sweep needs at least one noise level")
        # every level is scored on the same test collection
        task_settings.setdefault('test_noise', levels[0])

        logger.info("=" * 60)
        logger.info("ANNOTATION SWEEP: noise levels %s", levels)
        logger.info("Train pairs: %s, seeds: %s", sizes, seeds)
        logger.info("=" * 60)

        for seed in seeds:
            for noise in levels:
                for pairs in sizes:
                    task = generate_task(TaskConfig.from_config(
                        {**task_settings, 'positive_noise': noise, 'train_pairs': pairs,
                         'seed': seed}))
                    result = train(task, TrainConfig.from_config({**train_settings,
                                                                  'seed': seed}))
                    self.run_results.append(result)
                    self.results['runs'].append({
                        **result.to_dict(trajectories=False), 'positive_noise': noise,
                        'train_pairs': pairs})

        self.calculate_metrics()

        if records_file:
            append_records(records_file, [
                record_from_run(r, noise_label(run['positive_noise']))
                for r, run in zip(self.run_results, self.results['runs'])])
            logger.info("✓ Records appended to %s", records_file)

        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        save_results(self.results, self.results_dir,
                     "annotation_sweep_results_{}.json".format(timestamp))
        return self.results

    def calculate_metrics(self):
        """Data-size laws per noise level and paired comparisons against the cleanest level"""
        runs = pd.DataFrame(self.results['runs'])

        if runs.empty:
            logger.warning("No runs to analyze")
            return

        metrics = {'data_size_laws': {}, 'comparisons': {}}
        for noise, group in runs.groupby('positive_noise', sort=True):
            metrics['data_size_laws'][f"{noise:g}"] = {
                'effectiveness': data_size_law(group, 'effectiveness_ce'),
                'ood': data_size_law(group, 'ood_ce'),
            }

        cleanest = runs['positive_noise'].min()
        for noise in sorted(set(runs['positive_noise']) - {cleanest}):
            a, b = self.analyzer.paired_series(runs, noise, cleanest, 'ood_ce',
                                               by='positive_noise')
            if len(a) >= 2:
                metrics['comparisons'][f"{noise:g}"] = self.analyzer.compare_strategies(a, b)

        self.results['metrics'] = metrics

        logger.info("=" * 60)
        logger.info("TEST RESULTS:")
        logger.info("=" * 60)
        means = runs.groupby('positive_noise', sort=True)[['effectiveness_ce', 'ood_ce']].mean()
        for noise, row in means.iterrows():
            logger.info("noise %-6g effectiveness %.4f  ood %.4f",
                        noise, row.effectiveness_ce, row.ood_ce)
        for noise, result in metrics['comparisons'].items():
            logger.info("noise %s vs %g: median ood diff %+.4f (%s)", noise, cleanest,
                        result['median_difference'], result['effect_size'])
        logger.info("=" * 60)


def main():
    parser = argparse.ArgumentParser(description='Annotation Quality Sweep')
    parser.add_argument('--config', default='configs/experiment_config.json',
                        help='Configuration file')
    parser.add_argument('--results-dir', default='results',
                        help='Results directory')
    parser.add_argument('--records', help='Experiment-record CSV to append to')

    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format='%(message)s')

    test = AnnotationSweep(args.config, args.results_dir)
    test.run_test(args.records)


if __name__ == '__main__':
    main()
