"""Attach transcripts to audio attachments through pluggable providers.

Speech recognition itself stays outside the toolkit: the SIDECAR provider
reads a `<stem>.txt` file next to each audio file (fully offline, used by the
test fixture), and the COMMAND provider shells out to any local transcriber
that prints the transcript on stdout. Sensitive media never leaves the host.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .casegraph import ATTACHMENT, CaseGraph, MessageKind
from .errors import IOFailure, KindError

COMMAND_EMPTY_AUDIO_EXIT = 2


class ProviderKind(str, Enum):
    SIDECAR = "SIDECAR"
    COMMAND = "COMMAND"


@dataclass
class ProviderSpec:
    name: ProviderKind
    command_template: str | None = None

    def __post_init__(self) -> None:
        if self.name is ProviderKind.COMMAND and not self.command_template:
            raise ValueError("COMMAND provider requires command_template")


@dataclass
class Transcript:
    attachment_id: str
    text: str
    provider: str
    created_at: str
    empty_ok: bool = False


@dataclass
class EnrichReport:
    done: int = 0
    skipped: int = 0
    failed: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)


def attach_transcript(g: CaseGraph, attachment_id: str, t: Transcript) -> None:
    """Store a transcript on an AUDIO attachment node; latest wins."""
    node = g.require(attachment_id)
    if node.kind != ATTACHMENT or node.props.get("kind") != MessageKind.AUDIO.value:
        raise KindError(f"{attachment_id} is not an audio attachment")
    if not t.text and not t.empty_ok:
        raise ValueError("empty transcript without empty-result flag")
    history = node.props.setdefault("transcript_history", [])
    history.append({"text": t.text, "provider": t.provider, "created_at": t.created_at})
    node.props["transcript"] = t.text
    node.props["transcript_provider"] = t.provider
    node.props["transcript_created_at"] = t.created_at


def pending_audio(g: CaseGraph) -> list[str]:
    """Audio attachment node ids that do not have a transcript yet."""
    return sorted(
        n.node_id
        for n in g.nodes_of_kind(ATTACHMENT)
        if n.props.get("kind") == MessageKind.AUDIO.value and "transcript" not in n.props
    )


def transcribe_pending(g: CaseGraph, media_dir: Path, provider: ProviderSpec) -> EnrichReport:
    """Attempt every untranscribed audio attachment; failures never abort."""
    media_dir = Path(media_dir)
    report = EnrichReport()
    todo = pending_audio(g)
    total_audio = sum(
        1
        for n in g.nodes_of_kind(ATTACHMENT)
        if n.props.get("kind") == MessageKind.AUDIO.value
    )
    report.skipped = total_audio - len(todo)
    if todo and not media_dir.is_dir():
        raise IOFailure(f"media dir {media_dir} is not readable")

    for att_id in todo:
        node = g.nodes[att_id]
        audio_path = media_dir / node.props["filename"]
        try:
            transcript = _run_provider(provider, audio_path, att_id)
        except _ItemFailure as exc:
            report.failed += 1
            report.failures.append((att_id, str(exc)))
            continue
        attach_transcript(g, att_id, transcript)
        report.done += 1
    return report


class _ItemFailure(Exception):
    pass


def _mtime_iso(path: Path) -> str:
    # sidecar mtime keeps re-runs reproducible; wall clock would not
    ts = datetime.fromtimestamp(int(path.stat().st_mtime), tz=timezone.utc)
    return ts.isoformat().replace("+00:00", "Z")


def _run_provider(provider: ProviderSpec, audio_path: Path, att_id: str) -> Transcript:
    if provider.name is ProviderKind.SIDECAR:
        sidecar = audio_path.with_suffix(".txt")
        if not sidecar.is_file():
            raise _ItemFailure(f"missing sidecar {sidecar.name}")
        text = sidecar.read_text(encoding="utf-8").strip()
        return Transcript(
            attachment_id=att_id,
            text=text,
            provider="sidecar",
            created_at=_mtime_iso(sidecar),
            empty_ok=not text,
        )

    assert provider.command_template is not None
    argv = [
        part.replace("{audio_path}", str(audio_path))
        for part in shlex.split(provider.command_template)
    ]
    try:
        proc = subprocess.run(argv, capture_output=True, timeout=300)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise _ItemFailure(f"command failed to run: {exc}") from exc
    if proc.returncode not in (0, COMMAND_EMPTY_AUDIO_EXIT):
        raise _ItemFailure(f"command exited {proc.returncode}")
    text = proc.stdout.decode("utf-8").strip()
    empty_ok = proc.returncode == COMMAND_EMPTY_AUDIO_EXIT
    if not text and not empty_ok:
        raise _ItemFailure("command printed no transcript")
    now = datetime.now(timezone.utc).replace(microsecond=0)
    return Transcript(
        attachment_id=att_id,
        text=text,
        provider="command",
        created_at=now.isoformat().replace("+00:00", "Z"),
        empty_ok=empty_ok,
    )
