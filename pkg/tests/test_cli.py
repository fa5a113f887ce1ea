import json
import shlex
import sys
from pathlib import Path

import pytest

from bnsolve.cli import (
    DEFAULT_SANDBOX_CMD,
    EXIT_ERROR,
    EXIT_NO_CONSENSUS,
    EXIT_OK,
    EXIT_SANDBOX_TIMEOUT,
    _build_manifest,
    build_parser,
    main,
)
from bnsolve.errors import ConfigError

DATA_DIR = Path(__file__).parent / "data"

BN_QUESTION = "২+২ কত?"


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def mock_file(tmp_path, doc, name="mock.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def manifest_file(tmp_path, doc, name="manifest.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def dataset_file(tmp_path, rows, name="data.csv"):
    path = tmp_path / name
    lines = ["id,question,answer"]
    lines.extend(f"{pid},{q},{a}" for pid, q, a in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def stub_runner(tmp_path, reply=None, name="runner.py"):
    """Sandbox-runner stand-in that ignores the request and prints a
    fixed reply."""
    if reply is None:
        reply = {
            "stdout": "42\n",
            "stderr": "",
            "status": "ok",
            "duration_ms": 3,
            "truncated": False,
        }
    script = tmp_path / name
    script.write_text(
        "import json, sys\n"
        "sys.stdin.readline()\n"
        f"print(json.dumps({reply!r}))\n",
        encoding="utf-8",
    )
    return f"{shlex.quote(sys.executable)} {shlex.quote(str(script))}"


HELP_CASES = [
    (["--help"], "help.txt"),
    (["solve", "--help"], "help_solve.txt"),
    (["eval", "--help"], "help_eval.txt"),
    (["ablate", "--help"], "help_ablate.txt"),
    (["translate", "--help"], "help_translate.txt"),
    (["exec-test", "--help"], "help_exec-test.txt"),
]


class TestHelpScreens:
    @pytest.mark.parametrize("argv,golden", HELP_CASES, ids=[g for _, g in HELP_CASES])
    def test_help_matches_golden(self, argv, golden, capsys, monkeypatch):
        monkeypatch.setenv("COLUMNS", "80")
        code, out, err = run_cli(argv, capsys)
        assert code == EXIT_OK
        assert err == ""
        assert out == (DATA_DIR / golden).read_text(encoding="utf-8")

    def test_help_mentions_every_subcommand(self, capsys, monkeypatch):
        monkeypatch.setenv("COLUMNS", "80")
        _, out, _ = run_cli(["--help"], capsys)
        for name in ("solve", "eval", "ablate", "translate", "exec-test"):
            assert name in out


def parse(argv):
    return build_parser().parse_args(argv)


class TestBuildManifest:
    def test_flags_only(self):
        args = parse(["solve", "q", "--endpoint-url", "http://api.test", "--model", "m9"])
        manifest = _build_manifest(args)
        assert manifest.endpoint.base_url == "http://api.test"
        assert manifest.endpoint.model_name == "m9"
        assert manifest.run_name == "run"
        assert manifest.output_dir == "."
        assert manifest.sandbox_cmd is None

    def test_manifest_values_used(self, tmp_path):
        path = manifest_file(
            tmp_path,
            {
                "run_name": "night-sweep",
                "dataset_path": "data.csv",
                "output_dir": "out",
                "endpoint": {
                    "base_url": "http://api.test",
                    "model_name": "m7",
                    "api_key_env": "KEY_VAR",
                    "request_timeout": 30,
                    "max_retries": 4,
                    "fan_out_single": True,
                },
                "pipeline": {"reasoning": "tir", "self_consistency_n": 2},
                "sandbox_cmd": ["/bin/runner", "--strict"],
            },
        )
        manifest = _build_manifest(parse(["eval", "--manifest", path]))
        assert manifest.run_name == "night-sweep"
        assert manifest.dataset_path == "data.csv"
        assert manifest.output_dir == "out"
        assert manifest.endpoint.model_name == "m7"
        assert manifest.endpoint.api_key_env == "KEY_VAR"
        assert manifest.endpoint.request_timeout == 30
        assert manifest.endpoint.max_retries == 4
        assert manifest.endpoint.fan_out_single is True
        assert manifest.config.reasoning == "tir"
        assert manifest.config.self_consistency_n == 2
        assert manifest.sandbox_cmd == ["/bin/runner", "--strict"]

    def test_flags_override_manifest(self, tmp_path):
        path = manifest_file(
            tmp_path,
            {
                "output_dir": "manifest-out",
                "endpoint": {"base_url": "http://manifest.test", "model_name": "m-manifest"},
            },
        )
        args = parse(
            [
                "eval",
                "--manifest",
                path,
                "--endpoint-url",
                "http://flag.test",
                "--model",
                "m-flag",
                "--output-dir",
                "flag-out",
                "--concurrency",
                "4",
            ]
        )
        manifest = _build_manifest(args)
        assert manifest.endpoint.base_url == "http://flag.test"
        assert manifest.endpoint.model_name == "m-flag"
        assert manifest.output_dir == "flag-out"
        assert manifest.config.concurrency == 4

    def test_mock_script_fills_endpoint_defaults(self, tmp_path):
        mock = mock_file(tmp_path, {"script": [["x"]]})
        manifest = _build_manifest(parse(["solve", "q", "--mock-script", mock]))
        assert manifest.endpoint.base_url == "http://mock.invalid"
        assert manifest.endpoint.model_name == "mock-model"

    def test_no_endpoint_and_no_mock_rejected(self):
        with pytest.raises(ConfigError) as exc_info:
            _build_manifest(parse(["solve", "q"]))
        assert "no endpoint configured" in str(exc_info.value)

    def test_unknown_manifest_keys_rejected(self, tmp_path):
        path = manifest_file(tmp_path, {"mystery": 1})
        with pytest.raises(ConfigError):
            _build_manifest(parse(["eval", "--manifest", path]))

    def test_unknown_endpoint_keys_rejected(self, tmp_path):
        path = manifest_file(
            tmp_path, {"endpoint": {"base_url": "http://x", "model_name": "m", "port": 80}}
        )
        with pytest.raises(ConfigError):
            _build_manifest(parse(["eval", "--manifest", path]))

    def test_bad_run_name_rejected(self, tmp_path):
        path = manifest_file(
            tmp_path,
            {"run_name": "has spaces!", "endpoint": {"base_url": "http://x", "model_name": "m"}},
        )
        with pytest.raises(ConfigError):
            _build_manifest(parse(["eval", "--manifest", path]))

    def test_axes_parsed(self, tmp_path):
        path = manifest_file(
            tmp_path,
            {
                "endpoint": {"base_url": "http://x", "model_name": "m"},
                "axes": [
                    {"label": "baseline"},
                    {"label": "hot", "overrides": {"sampling": {"temperature": 1.2}}},
                ],
            },
        )
        manifest = _build_manifest(parse(["ablate", "--manifest", path]))
        assert manifest.axes == [
            ("baseline", {}),
            ("hot", {"sampling": {"temperature": 1.2}}),
        ]

    @pytest.mark.parametrize(
        "axes",
        [
            "not-a-list",
            [{"overrides": {}}],
            [{"label": ""}],
            [{"label": "a", "extra": 1}],
            [{"label": "a", "overrides": "hot"}],
        ],
    )
    def test_bad_axes_rejected(self, tmp_path, axes):
        path = manifest_file(
            tmp_path,
            {"endpoint": {"base_url": "http://x", "model_name": "m"}, "axes": axes},
        )
        with pytest.raises(ConfigError):
            _build_manifest(parse(["ablate", "--manifest", path]))

    def test_sandbox_cmd_string_split(self, tmp_path):
        path = manifest_file(
            tmp_path,
            {
                "endpoint": {"base_url": "http://x", "model_name": "m"},
                "sandbox_cmd": "python3 -m sandbox_runner",
            },
        )
        manifest = _build_manifest(parse(["eval", "--manifest", path]))
        assert manifest.sandbox_cmd == ["python3", "-m", "sandbox_runner"]

    def test_sandbox_cmd_flag_overrides_manifest(self, tmp_path):
        path = manifest_file(
            tmp_path,
            {
                "endpoint": {"base_url": "http://x", "model_name": "m"},
                "sandbox_cmd": "manifest-runner",
            },
        )
        args = parse(["eval", "--manifest", path, "--sandbox-cmd", "flag-runner --fast"])
        manifest = _build_manifest(args)
        assert manifest.sandbox_cmd == ["flag-runner", "--fast"]

    def test_default_sandbox_cmd_invokes_runner_module(self):
        assert DEFAULT_SANDBOX_CMD[-2:] == ["-m", "sandbox_runner"]

    def test_invalid_manifest_json_named(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{oops", encoding="utf-8")
        with pytest.raises(ConfigError) as exc_info:
            _build_manifest(parse(["eval", "--manifest", str(path)]))
        assert "invalid JSON" in str(exc_info.value)


class TestSolveCommand:
    def test_consensus_printed(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [["The answer is \\boxed{42}."]]})
        code, out, err = run_cli(["solve", "What is 6*7?", "--mock-script", mock], capsys)
        assert code == EXIT_OK
        assert out == "42\n"
        assert "[trace 1/1] termination=answered answer=42 executions=0" in err
        assert "consensus: 1/1 votes" in err

    def test_no_consensus_exit_code(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [["I have no idea."]]})
        code, out, err = run_cli(["solve", "What?", "--mock-script", mock], capsys)
        assert code == EXIT_NO_CONSENSUS
        assert out == ""
        assert "no parseable consensus across 1 candidate(s)" in err

    def test_self_consistency_vote(self, tmp_path, capsys):
        mock = mock_file(
            tmp_path, {"script": [["\\boxed{9}", "\\boxed{1}", "\\boxed{9}"]]}
        )
        code, out, err = run_cli(
            ["solve", "Q?", "--mock-script", mock, "--self-consistency", "3"], capsys
        )
        assert code == EXIT_OK
        assert out == "9\n"
        assert "consensus: 2/3 votes" in err

    def test_tie_flagged_on_stderr(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [["\\boxed{9}", "\\boxed{1}"]]})
        code, out, err = run_cli(
            ["solve", "Q?", "--mock-script", mock, "--self-consistency", "2"], capsys
        )
        assert code == EXIT_OK
        assert out == "9\n"
        assert "(tie, first-seen wins)" in err

    def test_question_from_file(self, tmp_path, capsys):
        question = tmp_path / "question.txt"
        question.write_text("What is 6*7?\n", encoding="utf-8")
        mock = mock_file(tmp_path, {"script": [["\\boxed{42}"]]})
        code, out, _ = run_cli(["solve", str(question), "--mock-script", mock], capsys)
        assert code == EXIT_OK
        assert out == "42\n"

    def test_tir_with_stub_sandbox(self, tmp_path, capsys):
        mock = mock_file(
            tmp_path,
            {"script": [["```python\nprint(6*7)\n```"], ["So \\boxed{42}."]]},
        )
        cmd = stub_runner(tmp_path)
        code, out, err = run_cli(
            [
                "solve",
                "What is 6*7?",
                "--mock-script",
                mock,
                "--reasoning",
                "tir",
                "--sandbox-cmd",
                cmd,
            ],
            capsys,
        )
        assert code == EXIT_OK
        assert out == "42\n"
        assert "executions=1" in err

    def test_tir_without_sandbox_rejected(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [["x"]]})
        code, _, err = run_cli(
            ["solve", "Q?", "--mock-script", mock, "--reasoning", "tir", "--no-sandbox"],
            capsys,
        )
        assert code == EXIT_ERROR
        assert "needs the code sandbox" in err

    def test_missing_api_key_names_variable(self, capsys, monkeypatch):
        monkeypatch.delenv("BNSOLVE_TEST_KEY", raising=False)
        code, _, err = run_cli(
            [
                "solve",
                "Q?",
                "--endpoint-url",
                "http://api.test",
                "--model",
                "m",
                "--api-key-env",
                "BNSOLVE_TEST_KEY",
            ],
            capsys,
        )
        assert code == EXIT_ERROR
        assert "BNSOLVE_TEST_KEY is not set" in err

    def test_empty_question_rejected(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [["x"]]})
        code, _, err = run_cli(["solve", "   ", "--mock-script", mock], capsys)
        assert code == EXIT_ERROR
        assert "question is empty" in err

    def test_prompt_file_overrides_template(self, tmp_path, capsys):
        prompts = tmp_path / "prompts.json"
        prompts.write_text(
            json.dumps(
                {
                    "templates": [
                        {
                            "id": "cot_en",
                            "messages": [{"role": "user", "text": "OVERRIDE {{question}}"}],
                        }
                    ]
                }
            ),
            encoding="utf-8",
        )
        mock = mock_file(
            tmp_path,
            {"keyed": {"OVERRIDE": [["\\boxed{1}"]]}, "default": [["\\boxed{2}"]]},
        )
        code, out, _ = run_cli(
            ["solve", "Q?", "--mock-script", mock, "--prompt-file", str(prompts)],
            capsys,
        )
        assert code == EXIT_OK
        assert out == "1\n"  # the keyed rule only fires on the overridden wording

    def test_model_error_reported(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [401]})
        code, out, err = run_cli(["solve", "Q?", "--mock-script", mock], capsys)
        assert code == EXIT_NO_CONSENSUS
        assert "termination=model_error" in err

    def test_usage_error_exits_one(self, capsys):
        code, _, err = run_cli(["solve", "Q?", "--mystery-flag"], capsys)
        assert code == EXIT_ERROR
        assert "error" in err

    def test_unknown_subcommand_exits_one(self, capsys):
        code, _, _ = run_cli(["frobnicate"], capsys)
        assert code == EXIT_ERROR

    def test_no_arguments_exits_one(self, capsys):
        code, _, _ = run_cli([], capsys)
        assert code == EXIT_ERROR

    def test_mock_script_with_both_kinds_rejected(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [["x"]], "keyed": {"a": [["y"]]}})
        code, _, err = run_cli(["solve", "Q?", "--mock-script", mock], capsys)
        assert code == EXIT_ERROR
        assert "either 'script' or 'keyed'" in err


class TestTranslateCommand:
    def test_translates_bengali(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [["What is 2 plus 2?"]]})
        code, out, _ = run_cli(["translate", BN_QUESTION, "--mock-script", mock], capsys)
        assert code == EXIT_OK
        assert out == "What is 2 plus 2?\n"

    def test_rejects_non_bengali_input(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [["x"]]})
        code, _, err = run_cli(["translate", "plain English", "--mock-script", mock], capsys)
        assert code == EXIT_ERROR
        assert "does not look like Bengali" in err


class TestEvalCommand:
    def eval_manifest(self, tmp_path, keyed=None, pipeline=None, extra=None):
        dataset = dataset_file(
            tmp_path, [("p1", "alpha?", 1), ("p2", "beta?", 2)]
        )
        mock = mock_file(
            tmp_path,
            {
                "keyed": keyed
                or {"alpha": [["\\boxed{1}"]], "beta": [["\\boxed{5}"]]}
            },
        )
        doc = {
            "run_name": "demo",
            "dataset_path": dataset,
            "output_dir": str(tmp_path / "out"),
            "mock_script": mock,
        }
        if pipeline:
            doc["pipeline"] = pipeline
        if extra:
            doc.update(extra)
        return manifest_file(tmp_path, doc)

    def test_writes_reports_and_prints_score(self, tmp_path, capsys):
        path = self.eval_manifest(tmp_path)
        code, out, err = run_cli(["eval", "--manifest", path], capsys)
        assert code == EXIT_OK
        assert out == "score: 50.00 / 100\n"
        md = tmp_path / "out" / "demo.md"
        as_json = tmp_path / "out" / "demo.json"
        assert md.is_file() and as_json.is_file()
        assert f"wrote {md}" in err
        assert f"wrote {as_json}" in err
        assert "# Evaluation report" in md.read_text(encoding="utf-8")
        doc = json.loads(as_json.read_text(encoding="utf-8"))
        assert doc["score"] == 50.0
        assert [r["problem_id"] for r in doc["results"]] == ["p1", "p2"]

    def test_requires_manifest_flag(self, capsys):
        code, _, err = run_cli(["eval"], capsys)
        assert code == EXIT_ERROR
        assert "eval needs --manifest" in err

    def test_requires_dataset_path(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [["x"]]})
        path = manifest_file(tmp_path, {"mock_script": mock})
        code, _, err = run_cli(["eval", "--manifest", path], capsys)
        assert code == EXIT_ERROR
        assert "dataset_path" in err

    def test_missing_dataset_file(self, tmp_path, capsys):
        mock = mock_file(tmp_path, {"script": [["x"]]})
        path = manifest_file(
            tmp_path,
            {"dataset_path": str(tmp_path / "absent.csv"), "mock_script": mock},
        )
        code, _, err = run_cli(["eval", "--manifest", path], capsys)
        assert code == EXIT_ERROR
        assert "error" in err


class TestAblateCommand:
    def test_sweep_prints_row_scores(self, tmp_path, capsys):
        dataset = dataset_file(tmp_path, [("p1", "what is 2 plus 2?", 4)])
        mock = mock_file(
            tmp_path,
            {"keyed": {"2 plus 2": [["\\boxed{5}"], ["\\boxed{4}"], ["\\boxed{4}"]]}},
        )
        path = manifest_file(
            tmp_path,
            {
                "run_name": "sweep",
                "dataset_path": dataset,
                "output_dir": str(tmp_path / "out"),
                "mock_script": mock,
                "endpoint": {"fan_out_single": True},
                "axes": [
                    {"label": "single"},
                    {"label": "vote3", "overrides": {"self_consistency_n": 3}},
                ],
            },
        )
        code, out, err = run_cli(["ablate", "--manifest", path], capsys)
        assert code == EXIT_OK
        assert out == "single: 0.00\nvote3: 100.00\n"
        table = (tmp_path / "out" / "sweep.md").read_text(encoding="utf-8")
        assert "# Ablation results" in table
        assert "| Translation | RAG | TIR | Self-Consistency | Score |" in table
        doc = json.loads((tmp_path / "out" / "sweep.json").read_text(encoding="utf-8"))
        assert [row["label"] for row in doc["rows"]] == ["single", "vote3"]

    def test_requires_axes(self, tmp_path, capsys):
        dataset = dataset_file(tmp_path, [("p1", "q?", 1)])
        mock = mock_file(tmp_path, {"script": [["x"]]})
        path = manifest_file(
            tmp_path, {"dataset_path": dataset, "mock_script": mock}
        )
        code, _, err = run_cli(["ablate", "--manifest", path], capsys)
        assert code == EXIT_ERROR
        assert "axes" in err

    def test_requires_manifest_flag(self, capsys):
        code, _, err = run_cli(["ablate"], capsys)
        assert code == EXIT_ERROR
        assert "ablate needs --manifest" in err


class TestExecTestCommand:
    def test_default_smoke_test_ok(self, tmp_path, capsys):
        cmd = stub_runner(tmp_path)
        code, out, _ = run_cli(["exec-test", "--sandbox-cmd", cmd], capsys)
        assert code == EXIT_OK
        assert out == "42\nstatus: ok\n"

    def test_custom_code_prints_raw_stdout(self, tmp_path, capsys):
        reply = {
            "stdout": "hello\n",
            "stderr": "",
            "status": "ok",
            "duration_ms": 1,
            "truncated": False,
        }
        cmd = stub_runner(tmp_path, reply)
        code, out, _ = run_cli(
            ["exec-test", "--sandbox-cmd", cmd, "--code", "print('hello')"], capsys
        )
        assert code == EXIT_OK
        assert out == "hello\n"

    def test_timeout_exit_code(self, tmp_path, capsys):
        reply = {
            "stdout": "",
            "stderr": "",
            "status": "timeout",
            "duration_ms": 10000,
            "truncated": False,
        }
        cmd = stub_runner(tmp_path, reply)
        code, out, _ = run_cli(["exec-test", "--sandbox-cmd", cmd], capsys)
        assert code == EXIT_SANDBOX_TIMEOUT
        assert out == "status: timeout after 10s\n"

    def test_runner_failure_exit_code(self, capsys):
        code, _, err = run_cli(
            ["exec-test", "--sandbox-cmd", "/no/such/runner-binary"], capsys
        )
        assert code == EXIT_ERROR
        assert "runner-binary" in err

    def test_nonzero_exit_code(self, tmp_path, capsys):
        reply = {
            "stdout": "",
            "stderr": "boom",
            "status": "nonzero_exit",
            "duration_ms": 1,
            "truncated": False,
        }
        cmd = stub_runner(tmp_path, reply)
        code, _, err = run_cli(["exec-test", "--sandbox-cmd", cmd], capsys)
        assert code == EXIT_ERROR
        assert "boom" in err

    def test_wrong_smoke_output_fails(self, tmp_path, capsys):
        reply = {
            "stdout": "41\n",
            "stderr": "",
            "status": "ok",
            "duration_ms": 1,
            "truncated": False,
        }
        cmd = stub_runner(tmp_path, reply)
        code, _, err = run_cli(["exec-test", "--sandbox-cmd", cmd], capsys)
        assert code == EXIT_ERROR
        assert "expected stdout '42'" in err
