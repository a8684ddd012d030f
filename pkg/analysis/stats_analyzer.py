#!/usr/bin/env python3
"""
Statistical analysis of strategy-sweep results
Confidence intervals, paired seed comparisons and effect sizes
"""

import argparse
import json
import logging
import os
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from scaling.errors import DomainError

logger = logging.getLogger(__name__)

CE_COLUMNS = ['effectiveness_ce', 'ood_ce', 'adversarial_ce', 'robustness_ce']
PAIRING_KEYS = ['model_size', 'train_pairs', 'seed']


class StatsAnalyzer:
    """Statistical analysis of simlab strategy runs"""

    def __init__(self, results_dir='results'):
        self.results_dir = results_dir

    def load_results(self, filename: str) -> dict:
        """Load results from JSON file"""
        filepath = os.path.join(self.results_dir, filename)
        with open(filepath, 'r') as f:
            return json.load(f)

    def runs_frame(self, results: dict) -> pd.DataFrame:
        """One row per (strategy, train_pairs, seed) run"""
        runs = pd.DataFrame(results.get('runs', []))
        if runs.empty:
            raise DomainError("results hold no runs")
        return runs

    def calculate_confidence_interval(self, data: Sequence[float],
                                      confidence: float = 0.95) -> Tuple[float, float, float]:
        """
        Calculate mean and confidence interval

        Args:
            data: List of measurements
            confidence: Confidence level (default 0.95 for 95%)

        Returns:
            Tuple of (mean, lower_bound, upper_bound)
        """
        n = len(data)
        mean = float(np.mean(data))
        if n < 2:
            return mean, mean, mean
        std_err = stats.sem(data)
        margin = std_err * stats.t.ppf((1 + confidence) / 2, n - 1)

        return mean, mean - margin, mean + margin

    def compare_strategies(self, candidate: Sequence[float],
                           baseline: Sequence[float]) -> Dict:
        """
        Paired comparison of two strategies run on the same seeds

        Args:
            candidate: CE per seed for the candidate strategy
            baseline: CE per seed for the baseline, same seed order

        Returns:
            Dictionary with median/mean difference (candidate - baseline),
            paired t-test, Cohen's d of the differences and win count
        """
        a = np.asarray(candidate, dtype=np.float64)
        b = np.asarray(baseline, dtype=np.float64)
        if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
            raise DomainError("paired comparison needs two equal-length series of >= 2 runs")
        diff = a - b
        spread = float(np.std(diff, ddof=1))
        mean_diff = float(np.mean(diff))
        if spread > 0:
            t_stat, p_value = stats.ttest_rel(a, b)
            cohens_d = mean_diff / spread
        else:
            # identical differences: the t statistic is undefined
            t_stat, p_value = np.nan, (1.0 if mean_diff == 0 else 0.0)
            cohens_d = 0.0 if mean_diff == 0 else float(np.copysign(np.inf, mean_diff))

        return {
            'median_difference': float(np.median(diff)),
            'mean_difference': mean_diff,
            't_statistic': float(t_stat),
            'p_value': float(p_value),
            'significant': bool(p_value < 0.05),
            'cohens_d': float(cohens_d),
            'effect_size': self._interpret_effect_size(cohens_d),
            'wins': int(np.sum(diff < 0)),
            'runs': int(len(diff)),
        }

    def _interpret_effect_size(self, d: float) -> str:
        """Interpret Cohen's d effect size"""
        d_abs = abs(d)
        if d_abs < 0.2:
            return 'negligible'
        elif d_abs < 0.5:
            return 'small'
        elif d_abs < 0.8:
            return 'medium'
        else:
            return 'large'

    def paired_series(self, runs: pd.DataFrame, strategy, baseline,
                      column: str, by: str = 'strategy') -> Tuple[np.ndarray, np.ndarray]:
        """
        Align two groups' values on the pairing keys present in runs

        Groups are selected by the `by` column; runs pair up on model size,
        train pairs and seed, whichever of them the frame carries.
        """
        keys = [k for k in PAIRING_KEYS if k in runs.columns and k != by]
        left = runs[runs[by] == strategy].set_index(keys)[column]
        right = runs[runs[by] == baseline].set_index(keys)[column]
        joined = pd.concat([left.rename('a'), right.rename('b')], axis=1, join='inner')
        joined = joined.sort_index()
        return joined['a'].to_numpy(), joined['b'].to_numpy()

    def analyze_strategy_comparison(self, results_file: str,
                                    baseline: str = 'standard') -> str:
        """
        Comprehensive comparison of every strategy against a baseline

        Args:
            results_file: Strategy-sweep results file
            baseline: Strategy every other strategy is compared against

        Returns:
            Text report
        """
        runs = self.runs_frame(self.load_results(results_file))
        lines = ["=" * 70, "STRATEGY COMPARISON: STATISTICAL ANALYSIS", "=" * 70, ""]

        for column in CE_COLUMNS:
            lines.append(f"{column.upper()} (lower is better):")
            lines.append("-" * 70)
            for strategy, group in runs.groupby('strategy', sort=True):
                mean, low, high = self.calculate_confidence_interval(group[column].tolist())
                lines.append(f"  {strategy:<14} mean {mean:.4f}  95% CI [{low:.4f}, {high:.4f}]"
                             f"  n={len(group)}")
            for strategy in sorted(set(runs['strategy']) - {baseline}):
                a, b = self.paired_series(runs, strategy, baseline, column)
                if len(a) < 2:
                    continue
                result = self.compare_strategies(a, b)
                lines.append(f"  {strategy} vs {baseline}: median diff "
                             f"{result['median_difference']:+.4f}, p={result['p_value']:.4g}, "
                             f"d={result['cohens_d']:.3f} ({result['effect_size']}), "
                             f"wins {result['wins']}/{result['runs']}")
            lines.append("")

        return "\n".join(lines)

    def generate_summary_report(self, output_file: str) -> List[str]:
        """Write a summary of every results file in the results directory"""
        result_files = sorted(f for f in os.listdir(self.results_dir) if f.endswith('.json'))

        with open(output_file, 'w') as f:
            f.write("=" * 70 + "\n")
            f.write("EXPERIMENTAL RESULTS SUMMARY REPORT\n")
            f.write("=" * 70 + "\n\n")

            for result_file in result_files:
                f.write(f"File: {result_file}\n")
                f.write("-" * 70 + "\n")

                try:
                    data = self.load_results(result_file)
                    f.write(f"Test Type: {data.get('test_type', 'unknown')}\n")
                    f.write(f"Timestamp: {data.get('timestamp', 'unknown')}\n")

                    if 'metrics' in data:
                        f.write("\nMetrics:\n")
                        for key, value in data['metrics'].items():
                            f.write(f"  {key}: {value}\n")

                    f.write("\n")

                except (OSError, ValueError) as e:
                    logger.warning("Skipping %s: %s", result_file, e)
                    f.write(f"Error processing file: {e}\n\n")

        logger.info("✓ Summary report saved to %s", output_file)
        return result_files


def main():
    parser = argparse.ArgumentParser(description='Statistical Analysis')
    parser.add_argument('--results-dir', default='results',
                        help='Results directory')
    parser.add_argument('--sweep', help='Strategy-sweep results file')
    parser.add_argument('--baseline', default='standard',
                        help='Baseline strategy')
    parser.add_argument('--summary', help='Write summary report to this file')

    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format='%(message)s')

    analyzer = StatsAnalyzer(args.results_dir)

    if args.sweep:
        print(analyzer.analyze_strategy_comparison(args.sweep, args.baseline))

    if args.summary:
        analyzer.generate_summary_report(args.summary)


if __name__ == '__main__':
    main()
