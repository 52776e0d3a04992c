import os

import numpy as np
import pytest

from panelrisk.panel import PanelDataset
from panelrisk.simulation import DGPSpec, generate_panel

BASE_SLOPES = {
    "imp": 0.3,
    "npt": -0.2,
    "budget": 0.5,
    "intrate": -0.4,
    "inflation": 0.2,
    "finrisk": 0.3,
    "yrisk": 0.6,
}
RISK_FORMULA = "y ~ y(-1) + imp + npt + budget(-1) + intrate(-1) + inflation(-1) + finrisk(-1) + yrisk(-1)"


@pytest.fixture(scope="session", autouse=True)
def cache_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cvcache")
    old = os.environ.get("PANELRISK_CACHE_DIR")
    os.environ["PANELRISK_CACHE_DIR"] = str(d)
    yield d
    if old is None:
        os.environ.pop("PANELRISK_CACHE_DIR", None)
    else:
        os.environ["PANELRISK_CACHE_DIR"] = old


def random_panel(seed, n_entities=5, n_periods=8, k=2, effect_sd=1.0):
    slopes = {f"x{j + 1}": 0.5 * (j + 1) * (-1) ** j for j in range(k)}
    return generate_panel(DGPSpec(n_entities, n_periods, slopes, entity_effect_sd=effect_sd, seed=seed))


def country_panel(seed=7, effect_sd=2.0, effect_corr=0.8):
    dgp = DGPSpec(
        15, 20, BASE_SLOPES, entity_effect_sd=effect_sd, effect_regressor_corr=effect_corr, seed=seed, start_year=1995
    )
    return generate_panel(dgp)


def panel_from(values: dict, entities=None, years=None):
    first = np.asarray(next(iter(values.values())), dtype=float)
    entities = entities or tuple(f"E{i}" for i in range(first.shape[0]))
    years = years or tuple(range(2000, 2000 + first.shape[1]))
    return PanelDataset(entities, years, values)
