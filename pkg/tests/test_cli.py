import numpy as np
import pytest

from app.cli import EXIT_CHECK, EXIT_DECODE, EXIT_FORMAT, EXIT_OK, EXIT_USAGE, main
from app.models.params import Scheme, derive_params
from app.services.bench.harness import mutate
from app.services.coding.insdelcode import serialize_codeword
from app.services.sketch.codec import serialize
from app.services.sketch.smallbias import entropy_size
from app.services.sketch.summary import build_summary, expand_entropy
from app.utils.bits import bits_to_bytes


@pytest.fixture
def files(tmp_path, random_file, rng):
    original = tmp_path / "original.bin"
    original.write_bytes(random_file)
    Fp, _ = mutate(random_file, 2, rng, weights=(0, 0, 1))
    nearby = tmp_path / "nearby.bin"
    nearby.write_bytes(bits_to_bytes(Fp))
    return tmp_path, original, nearby


def test_summarize_then_reconstruct(files, random_file, capsys):
    tmp_path, original, nearby = files
    summary = tmp_path / "summary.dxs"
    out = tmp_path / "recovered.bin"
    assert main(["summarize", str(original), "--k", "2", "--scheme", "alg1", "--seed", "abcd", "--out", str(summary)]) == EXIT_OK
    assert "bytes=" in capsys.readouterr().err
    assert main(["reconstruct", str(summary), str(nearby), "--out", str(out)]) == EXIT_OK
    assert out.read_bytes() == random_file
    assert main(["inspect", str(summary)]) == EXIT_OK
    err = capsys.readouterr().err
    assert f"total={summary.stat().st_size}" in err
    assert "final_check_bits=64" in err and "seed_bits=" in err
    assert "enumeration_cap_bits" not in err


def test_seeded_summaries_are_reproducible(files):
    tmp_path, original, _ = files
    a, b = tmp_path / "a.dxs", tmp_path / "b.dxs"
    for path in (a, b):
        assert main(["summarize", str(original), "--k", "2", "--scheme", "alg2", "--seed", "01", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_nonpositive_budget_is_a_usage_error(files):
    tmp_path, original, _ = files
    assert main(["summarize", str(original), "--k", "0", "--out", str(tmp_path / "s")]) == EXIT_USAGE
    assert not (tmp_path / "s").exists()


def test_missing_arguments_exit_with_usage():
    with pytest.raises(SystemExit) as info:
        main(["summarize"])
    assert info.value.code == EXIT_USAGE


def test_malformed_summary_is_a_format_error(files):
    tmp_path, _, nearby = files
    bogus = tmp_path / "bogus.dxs"
    bogus.write_bytes(b"DXS1\x01\x00garbage")
    out = tmp_path / "out.bin"
    assert main(["reconstruct", str(bogus), str(nearby), "--out", str(out)]) == EXIT_FORMAT
    assert not out.exists()


def test_final_check_mismatch_exit_code(files, random_file):
    tmp_path, _, nearby = files
    params = derive_params(1024, 2, Scheme.ALG1_RANDOM)
    s = build_summary(random_file, params, entropy=expand_entropy("77", entropy_size(params)))
    s = s.model_copy(update={"final_check": bytes(8)})
    summary = tmp_path / "tampered.dxs"
    summary.write_bytes(serialize(s))
    assert main(["reconstruct", str(summary), str(nearby), "--out", str(tmp_path / "out")]) == EXIT_CHECK


def test_bad_seed_is_a_usage_error(files):
    tmp_path, original, _ = files
    code = main(["summarize", str(original), "--k", "2", "--scheme", "alg1", "--seed", "xyz", "--out", str(tmp_path / "s")])
    assert code == EXIT_USAGE


def test_encode_corrupt_decode(tmp_path, rng):
    message = rng.integers(0, 256, size=64, dtype=np.uint8).tobytes()
    src = tmp_path / "message.bin"
    src.write_bytes(message)
    codeword, corrupted, out = tmp_path / "c.dxc", tmp_path / "c2.dxc", tmp_path / "decoded.bin"
    assert main(["encode", str(src), "--k", "1", "--out", str(codeword)]) == EXIT_OK
    assert main(["corrupt", str(codeword), "--k", "1", "--seed", "2a", "--out", str(corrupted)]) == EXIT_OK
    assert main(["decode", str(corrupted), "--out", str(out)]) == EXIT_OK
    assert out.read_bytes() == message


def test_undecodable_codeword_exit_code(tmp_path):
    bits = np.zeros(512 + 40, dtype=np.uint8)
    path = tmp_path / "short.dxc"
    path.write_bytes(serialize_codeword(512, 1, 1, bits))
    assert main(["decode", str(path), "--out", str(tmp_path / "out")]) == EXIT_DECODE


def test_bench_writes_csv(tmp_path, capsys):
    csv_path = tmp_path / "bench.csv"
    assert main(["bench", "--sizes", "512:1", "--scheme", "alg1", "--trials", "2", "--csv", str(csv_path)]) == EXIT_OK
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "n,k,scheme,seed,summary_bits,success,micros"
    assert len(lines) == 3
    assert "fitted_constant=" in capsys.readouterr().err


def test_bench_rejects_bad_sizes():
    assert main(["bench", "--sizes", "512-1"]) == EXIT_USAGE


@pytest.mark.slow
def test_selftest():
    assert main(["selftest"]) == EXIT_OK
