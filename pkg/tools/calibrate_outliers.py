#!/usr/bin/env python

"""Sweep (lam, beta) on planted-outlier clouds and print the mean precision/recall of every pair"""
import os
import sys
import argparse


import numpy as np
import pretty_errors
from tqdm import tqdm


pretty_errors.configure(display_link=True)


file_dir = os.path.dirname(__file__)
sys.path.insert(0, os.path.abspath(os.path.join(file_dir, '..')))
sys.path.insert(0, os.path.abspath(os.path.join(file_dir, '../unittest')))
from sparsenav.config import OutlierParams, ScoreParams
from sparsenav.outlier import detection_quality, remove_outliers
from conftest import make_planted_cloud


def sweep(lams, betas, seeds, k: int, normalize: bool):
    rows = []
    bar = tqdm(total=len(lams) * len(betas) * len(seeds), desc='calibrate', ascii=True, leave=False)
    for lam in lams:
        for beta in betas:
            params = OutlierParams(lam=lam, k=k, beta=beta, score=ScoreParams(normalize=normalize))
            quality = []
            for seed in seeds:
                cloud, truth = make_planted_cloud(seed)
                quality.append(detection_quality(remove_outliers(cloud, params), truth))
                bar.update()
            precision, recall = np.mean(quality, axis=0)
            rows.append((lam, beta, precision, recall))
    bar.close()
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument('--lam', type=float, nargs=3, default=[0.40, 0.50, 0.01], metavar=('START', 'STOP', 'STEP'))
    parser.add_argument('--beta', type=float, nargs='+', default=[0.5, 1.0, 2.0])
    parser.add_argument('--seeds', type=int, default=5)
    parser.add_argument('-k', type=int, default=8)
    parser.add_argument('--raw', action='store_true', help='score the cloud without normalization')
    args = parser.parse_args()

    start, stop, step = args.lam
    lams = [round(x, 6) for x in np.arange(start, stop + step / 2, step)]
    rows = sweep(lams, args.beta, range(args.seeds), args.k, not args.raw)
    print(f"{'lam':>8} {'beta':>6} {'precision':>10} {'recall':>8}")
    for lam, beta, precision, recall in rows:
        mark = ' *' if precision == 1.0 and recall == 1.0 else ''
        print(f'{lam:8.3f} {beta:6.2f} {precision:10.3f} {recall:8.3f}{mark}')


if __name__ == "__main__":
    main()
