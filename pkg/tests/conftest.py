import numpy as np
import pytest

from fbindex import assembly, engine, geometry


@pytest.fixture(scope="session")
def catenoid_chart():
    return geometry.make_critical_catenoid()


@pytest.fixture(scope="session")
def disk_chart():
    return geometry.make_equatorial_disk()


@pytest.fixture(scope="session")
def cat_op_64(catenoid_chart):
    return assembly.assemble(catenoid_chart, assembly.CoefficientField(),
                             (64, 64), geometry.DEFAULT_TOLERANCES)


@pytest.fixture(scope="session")
def cat_dtn_64(cat_op_64):
    nt = geometry.DEFAULT_TOLERANCES.null_tol_at(64)
    return engine.build_dtn(cat_op_64, nt)


@pytest.fixture(scope="session")
def disk_op_64(disk_chart):
    return assembly.assemble(disk_chart, assembly.CoefficientField(),
                             (64, 64), geometry.DEFAULT_TOLERANCES)


@pytest.fixture(scope="session")
def disk_dtn_64(disk_op_64):
    nt = geometry.DEFAULT_TOLERANCES.null_tol_at(64)
    return engine.build_dtn(disk_op_64, nt)
