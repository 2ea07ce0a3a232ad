"""Dev scratch: watch training quality on the sine dataset."""
import time

import numpy as np

from fpimpute import masks, model, synthetic
from fpimpute.data import minmax_apply, minmax_fit_transform


def rmse_sum(pred, truth, missing):
    n = truth.shape[0]
    return sum(
        np.sqrt(((pred[:, j] - truth[:, j]) ** 2).sum() / n) for j in range(truth.shape[1])
    )


def trial(name, n_train, epochs, j, hidden, seed=13):
    train = synthetic.make(name, n=n_train, seed=6)
    test = synthetic.make(name, n=200, seed=60)
    norm_train, params = minmax_fit_transform(train)
    norm_test = minmax_apply(test, params)
    train_mask = masks.generate_mask(norm_train, 0.5, "mnar-random", seed=61)
    test_mask = masks.generate_mask(norm_test, 0.5, "mnar-random", seed=62)

    mean_fill = masks.fit_fill(norm_train.values, train_mask.missing, "mean")
    mean_test = masks.apply_fill(norm_test.values, test_mask.missing, mean_fill)
    base = rmse_sum(mean_test, norm_test.values, test_mask.missing)

    t0 = time.time()
    m = model.GenerativeImputer(
        norm_train.n_features,
        feature_kinds=norm_train.feature_kinds(),
        latent_dim=j,
        encoder_hidden=hidden,
        decoder_hidden=tuple(reversed(hidden)),
        seed=seed,
    )
    cfg = model.FitConfig(epochs=epochs, seed=seed)
    res = model.fit(m, norm_train, train_mask, cfg)
    imputed = model.transform(m, norm_test.values, test_mask.missing, n_iters=2)
    ours = rmse_sum(imputed, norm_test.values, test_mask.missing)
    print(
        f"{name:7s} n={n_train:5d} epochs={epochs:3d} J={j:3d} h={hidden}: "
        f"ours {ours:.3f} vs mean {base:.3f} ({'WIN' if ours < base else 'lose'}) "
        f"obj {res.epoch_objectives[0]:.1f}->{res.epoch_objectives[-1]:.1f} "
        f"({time.time() - t0:.1f}s)"
    )


for n_train in (400, 1000, 2000):
    trial("sine", n_train, 100, 100, (128, 64))
trial("sine", 1000, 200, 100, (128, 64))
trial("mixed", 1000, 100, 100, (128, 64))
trial("linear", 1000, 100, 100, (128, 64))
