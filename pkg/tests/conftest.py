import pytest

from orientperc import _pykernels

try:
    from orientperc import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.NAME)
def backend(request):
    return request.param


@pytest.fixture
def compiled():
    if _ckernels is None:
        pytest.skip("compiled extension not built")
    return _ckernels


@pytest.fixture
def triangle_file(tmp_path):
    path = tmp_path / "triangle.txt"
    path.write_text("vertices 3\n# s=0 a=1 b=2\nedge 0 1\nedge 0 2\nedge 1 2\n")
    return str(path)
