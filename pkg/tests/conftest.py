import numpy as np
import pytest

from stampmon import dsp, pipeline, signals

PAPER_FS = 100_000.0


@pytest.fixture(scope="session")
def gen_params():
    return signals.GeneratorParams()


@pytest.fixture(scope="session")
def std_filter():
    return dsp.FilterSpec(cutoff_hz=1800.0, order=3, sample_rate_hz=PAPER_FS)


@pytest.fixture(scope="session")
def cascade(std_filter):
    return dsp.design_butterworth_lowpass(std_filter)


@pytest.fixture(scope="session")
def small_dataset(gen_params):
    return signals.synthesize_dataset(gen_params, 120, 8, seed=3)


@pytest.fixture(scope="session")
def small_split_spec():
    return signals.SplitSpec(train_fraction=0.6, test_fraction=0.2, seed=3)


@pytest.fixture(scope="session")
def small_model(small_dataset, std_filter, small_split_spec):
    model, _ = pipeline.train_monitor(
        small_dataset, std_filter, split_spec=small_split_spec, seed=3
    )
    return model


@pytest.fixture(scope="session")
def small_model_path(small_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.json"
    pipeline.save_model(small_model, path)
    return path


def make_stroke(samples, rate=PAPER_FS, label=signals.UNLABELED, stroke_id="t"):
    return signals.StrokeSignal(
        stroke_id=stroke_id,
        samples=np.asarray(samples, dtype=np.float64),
        sample_rate_hz=rate,
        label=label,
    )
