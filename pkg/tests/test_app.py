import numpy as np
import pytest

import app
from helpers import golden_bytes, sparse_codes
from services.container_service import read_activation
from services.dct_service import dct_matrix
from services.tensor_service import read_tensor, write_tensor
from utils.constants import EXIT_DATA, EXIT_OK, EXIT_USAGE, TABLE1_PRESET
from utils.models import Tensor


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ('FMC_DEFAULT_BITS', 'FMC_RAW_BITS', 'FMC_WORKERS', 'FMC_VERBOSE', 'FMC_FAST_DCT'):
        monkeypatch.delenv(name, raising=False)


def _values(out):
    """key=value pairs from the machine-readable summary lines"""
    pairs = {}
    for line in out.splitlines():
        key, sep, value = line.partition('=')
        if sep and ' ' not in key:
            pairs[key] = value
    return pairs


def test_gen_is_deterministic(tmp_path, capsys):
    first, second = tmp_path / 'one', tmp_path / 'two'
    assert app.run(['--quiet', 'gen', '--out-dir', str(first), '--seed', '3']) == EXIT_OK
    assert app.run(['--quiet', 'gen', '--out-dir', str(second), '--seed', '3']) == EXIT_OK

    out = capsys.readouterr().out
    assert out.count('file=') == 10
    for stage in range(5):
        name = f"stage_{stage}.fmc"
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert read_tensor(first / 'stage_4.fmc').dims == (1, 128, 1, 1)


def test_gen_lowpass(tmp_path, capsys):
    code = app.run(['--quiet', 'gen', '--out-dir', str(tmp_path), '--stages', '2', '--sparsity', '0.5',
                    '--spectrum', 'lowpass(2)'])
    assert code == EXIT_OK
    assert 'spectrum=lowpass(2)' in capsys.readouterr().out


@pytest.mark.parametrize('args', [
    ['gen'],
    ['gen', '--out-dir', 'x', '--sparsity', '0.5,0.5'],
    ['gen', '--out-dir', 'x', '--spectrum', 'pink'],
    ['gen', '--out-dir', 'x', '--shape', '8,8'],
])
def test_gen_usage_errors(args, capsys):
    assert app.run(args) == EXIT_USAGE


def test_compress_reports_zvc_ratio(tmp_path, capsys):
    source = tmp_path / 'x.fmc'
    write_tensor(sparse_codes((1, 16, 16, 16), 1638), source)

    code = app.run(['--quiet', 'compress', str(source), '-o', str(tmp_path / 'x.dcm'), '--method', 'zvc'])
    values = _values(capsys.readouterr().out)

    assert code == EXIT_OK
    assert values['method'] == 'zvc'
    assert int(values['nnz']) == 1638
    assert float(values['ratio']) == pytest.approx(1.896, abs=1e-3)


def test_zvc_round_trip_is_byte_exact(tmp_path):
    source = tmp_path / 'x.fmc'
    write_tensor(sparse_codes((1, 8, 4, 4), 60, bitwidth=8, seed=1), source)

    assert app.run(['--quiet', 'compress', str(source), '-o', str(tmp_path / 'x.dcm'), '--method', 'zvc']) == EXIT_OK
    assert app.run(['--quiet', 'decompress', str(tmp_path / 'x.dcm'), '-o', str(tmp_path / 'y.fmc')]) == EXIT_OK
    assert (tmp_path / 'y.fmc').read_bytes() == source.read_bytes()


def test_zvc_container_matches_golden(tmp_path):
    source = tmp_path / 'x.fmc'
    source.write_bytes(golden_bytes('codes_u8.fmc.hex'))

    assert app.run(['--quiet', 'compress', str(source), '-o', str(tmp_path / 'x.dcm'), '--method', 'zvc']) == EXIT_OK
    assert (tmp_path / 'x.dcm').read_bytes() == golden_bytes('zvc_example.dcm.hex')


def test_dctcm_round_trip_of_zeros(tmp_path):
    source = tmp_path / 'zero.fmc'
    write_tensor(Tensor((1, 16, 2, 2), np.zeros(64)), source)

    args = ['--quiet', 'compress', str(source), '-o', str(tmp_path / 'z.dcm'), '--method', 'dct-cm',
            '--mask', 'm1', '--stage', '4']
    assert app.run(args) == EXIT_OK
    assert read_activation(tmp_path / 'z.dcm').keep == 1
    assert app.run(['--quiet', 'decompress', str(tmp_path / 'z.dcm'), '-o', str(tmp_path / 'out.fmc')]) == EXIT_OK

    out = read_tensor(tmp_path / 'out.fmc')
    assert out.dims == (1, 16, 2, 2)
    assert out.nnz == 0


def test_zvc_f32_round_trip_is_byte_exact(tmp_path, capsys):
    source = tmp_path / 'x.fmc'
    write_tensor(Tensor((1, 4, 2, 1), [0.0, 0.25, -1.5, 0.0, 0.0, 3.0, 0.0, 0.0078125]), source)

    code = app.run(['--quiet', 'compress', str(source), '-o', str(tmp_path / 'x.dcm'), '--method', 'zvc-f32'])
    values = _values(capsys.readouterr().out)
    assert code == EXIT_OK
    assert values['config'] == 'zvc:f32'
    assert values['nnz'] == '4'
    assert read_activation(tmp_path / 'x.dcm').quant is None

    assert app.run(['--quiet', 'decompress', str(tmp_path / 'x.dcm'), '-o', str(tmp_path / 'y.fmc')]) == EXIT_OK
    assert (tmp_path / 'y.fmc').read_bytes() == source.read_bytes()


@pytest.mark.parametrize('method', ['dct-cm', 'dct-2d'])
def test_one_bit_signed_pipelines_are_usage_errors(tmp_path, capsys, method):
    source = tmp_path / 'x.fmc'
    write_tensor(Tensor((1, 8, 8, 8), np.ones(512)), source)
    code = app.run(['compress', str(source), '-o', str(tmp_path / 'x.dcm'), '--method', method, '--bits', '1'])
    assert code == EXIT_USAGE
    assert 'Usage error' in capsys.readouterr().err
    assert not (tmp_path / 'x.dcm').exists()


def test_zvc_with_threshold_becomes_asp(tmp_path, capsys):
    source = tmp_path / 'x.fmc'
    write_tensor(Tensor((1, 4, 1, 1), [0.1, 0.3, 0.2, 0.05]), source)
    code = app.run(['--quiet', 'compress', str(source), '-o', str(tmp_path / 'x.dcm'), '--method', 'zvc',
                    '--asp-threshold', '0.2'])
    values = _values(capsys.readouterr().out)
    assert code == EXIT_OK
    assert values['method'] == 'asp+zvc'
    assert values['nnz'] == '2'


def test_unknown_method_lists_choices(tmp_path, capsys):
    source = tmp_path / 'x.fmc'
    write_tensor(Tensor((1, 1, 1, 1), [0.0]), source)
    code = app.run(['compress', str(source), '-o', str(tmp_path / 'x.dcm'), '--method', 'lz4'])
    err = capsys.readouterr().err
    assert code == EXIT_USAGE
    assert 'dct-cm' in err and 'dct-2d' in err


def test_bad_mask_is_usage_error(tmp_path):
    source = tmp_path / 'x.fmc'
    write_tensor(Tensor((1, 8, 1, 1), np.ones(8)), source)
    code = app.run(['compress', str(source), '-o', str(tmp_path / 'x.dcm'), '--method', 'dct-cm',
                    '--mask', '10100000/8'])
    assert code == EXIT_USAGE


def test_truncated_container_is_data_error(tmp_path, capsys):
    source = tmp_path / 'x.fmc'
    write_tensor(sparse_codes((1, 8, 4, 4), 60), source)
    app.run(['--quiet', 'compress', str(source), '-o', str(tmp_path / 'x.dcm'), '--method', 'zvc'])

    broken = tmp_path / 'broken.dcm'
    broken.write_bytes((tmp_path / 'x.dcm').read_bytes()[:-3])
    assert app.run(['decompress', str(broken), '-o', str(tmp_path / 'y.fmc')]) == EXIT_DATA
    assert 'broken.dcm' in capsys.readouterr().err


def test_bad_tensor_file_is_data_error(tmp_path):
    source = tmp_path / 'x.fmc'
    source.write_bytes(b'NOPE' + bytes(40))
    assert app.run(['compress', str(source), '-o', str(tmp_path / 'x.dcm'), '--method', 'zvc']) == EXIT_DATA


def test_stats_with_reference(tmp_path, capsys):
    source = tmp_path / 'x.fmc'
    write_tensor(sparse_codes((1, 8, 4, 4), 60), source)
    code = app.run(['--quiet', 'stats', str(source), '--methods', 'zvc;dct-cm:m1:8', '--ref', str(source)])
    lines = capsys.readouterr().out.splitlines()

    assert code == EXIT_OK
    rows = [line for line in lines if line.startswith('row ')]
    assert len(rows) == 2
    assert 'max_abs_err=0 ' in rows[0]
    assert sum(line.startswith('aggregate ') for line in lines) == 2


def test_stats_table_preset(tmp_path, capsys):
    app.run(['--quiet', 'gen', '--out-dir', str(tmp_path), '--seed', '1'])
    capsys.readouterr()
    inputs = [str(tmp_path / f"stage_{stage}.fmc") for stage in range(5)]

    assert app.run(['--quiet', 'stats', *inputs, '--preset', 'table1']) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert sum(line.startswith('aggregate ') for line in lines) == len(TABLE1_PRESET)
    assert sum(line.startswith('row ') for line in lines) == 5 * len(TABLE1_PRESET)


def test_stats_stage_count_mismatch(tmp_path):
    source = tmp_path / 'x.fmc'
    write_tensor(Tensor((1, 1, 1, 1), [0.0]), source)
    assert app.run(['stats', str(source), '--stages', '0,1']) == EXIT_USAGE


def test_fuse_weights_identity(tmp_path, capsys):
    source = tmp_path / 'w.fmc'
    write_tensor(Tensor((8, 8, 1, 1), np.eye(8)), source)

    assert app.run(['--quiet', 'fuse-weights', str(source), '-o', str(tmp_path / 'f.fmc')]) == EXIT_OK
    values = _values(capsys.readouterr().out)
    assert float(values['probe_residual']) <= 1e-9

    fused = read_tensor(tmp_path / 'f.fmc')
    assert np.allclose(fused.data.reshape(8, 8), dct_matrix(8).a.T, atol=1e-6)


def test_fuse_weights_unsupported_length(tmp_path):
    source = tmp_path / 'w.fmc'
    write_tensor(Tensor((2, 6, 1, 1), np.ones(12)), source)
    assert app.run(['fuse-weights', str(source), '-o', str(tmp_path / 'f.fmc')]) == EXIT_DATA


def test_bad_environment_is_usage_error(monkeypatch, tmp_path):
    monkeypatch.setenv('FMC_WORKERS', 'many')
    assert app.run(['gen', '--out-dir', str(tmp_path)]) == EXIT_USAGE
