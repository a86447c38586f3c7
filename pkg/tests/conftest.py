import math

import pytest
from hypothesis import settings

from onss.kinematics import Grid, KinParams
from onss.regions import Region, RegionMap, RegionType, Workspace

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def small_map(crs=(), tr=((16.0, 10.0), 2.5), size=20.0, **kw):
    ws = Workspace(0.0, 0.0, size, size)
    regions = tuple(Region(c, r, RegionType.CR) for c, r in crs)
    t = None if tr is None else Region(tr[0], tr[1], RegionType.TR)
    return RegionMap(ws, regions, t, **kw)


def small_grid(size=20.0, headings=32):
    return Grid(Workspace(0.0, 0.0, size, size), 1.0, headings)


@pytest.fixture
def kin():
    return KinParams()


@pytest.fixture
def straight_kin():
    return KinParams(step_len=2.0, radius=math.inf, max_deviation=0.2, sample_spacing=0.5)
