import json
import random
import string
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from casekit.casegraph import build_graph
from casekit.enrich import ProviderKind, ProviderSpec, transcribe_pending
from casekit.ingest import (
    AttachmentRef,
    ChatDump,
    ContactRef,
    Message,
    MessageKind,
    derive_sameas,
    parse_text_dump,
)
from casekit.neel.linking import load_kb_tsv
from casekit.neel.pipeline import run_pipeline

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "case_acme"

EXTRA_GAZETTEER = {"steve": "PER", "Tom": "PER"}

# verdict lines recorded by the acceptance tests, echoed after the run
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def manifest() -> dict:
    return json.loads((FIXTURE_DIR / "manifest.json").read_text())


@pytest.fixture(scope="session")
def parsed_case():
    return parse_text_dump((FIXTURE_DIR / "acme.dump").read_text(encoding="utf-8"))


@pytest.fixture()
def case_graph(parsed_case):
    """Fresh graph per test; tests may mutate it."""
    return build_graph(parsed_case.chats, derive_sameas(parsed_case.chats))


@pytest.fixture()
def enriched_graph(case_graph):
    transcribe_pending(case_graph, FIXTURE_DIR / "media", ProviderSpec(ProviderKind.SIDECAR))
    return case_graph


@pytest.fixture(scope="session")
def kb_entries():
    return load_kb_tsv(FIXTURE_DIR / "kb.tsv")


@pytest.fixture(scope="session")
def pipeline_result(parsed_case, kb_entries):
    """Full NEEL run over the fixture; treat as read-only."""
    g = build_graph(parsed_case.chats, derive_sameas(parsed_case.chats))
    transcribe_pending(g, FIXTURE_DIR / "media", ProviderSpec(ProviderKind.SIDECAR))
    return run_pipeline(g, kb_entries, extra_gazetteer=EXTRA_GAZETTEER), g


# ---------------------------------------------------------------------------
# random-case generation shared by the fuzz and oracle tests
# ---------------------------------------------------------------------------

NAME_ALPHABET = string.ascii_letters + "  .'" + "àéìöü"
TEXT_ALPHABET = string.ascii_letters + string.digits + "     .,!?'\"@#%&*+-_/\\\n€àé"
FILE_ALPHABET = string.ascii_lowercase + string.digits + "-_."


def random_name(rng: random.Random) -> str:
    name = "".join(rng.choice(NAME_ALPHABET) for _ in range(rng.randint(2, 14))).strip()
    return name or "anon"


def random_phone(rng: random.Random) -> str:
    return "+" + "".join(rng.choice(string.digits) for _ in range(rng.randint(7, 15)))


def random_timestamp(rng: random.Random) -> datetime:
    base = datetime(2021, 1, 1, tzinfo=timezone.utc)
    return base + timedelta(seconds=rng.randint(0, 4 * 365 * 24 * 3600))


def random_chat(rng: random.Random, chat_id: str, contacts: list[ContactRef] | None = None) -> ChatDump:
    participants = contacts or [
        ContactRef(random_name(rng), random_phone(rng)) for _ in range(rng.randint(1, 4))
    ]
    n_messages = rng.randint(0, 12)
    stamps = sorted(random_timestamp(rng) for _ in range(n_messages))
    messages = []
    for i, ts in enumerate(stamps):
        sender = rng.choice(participants)
        kind = rng.choice(list(MessageKind))
        if kind is MessageKind.TEXT:
            text = "".join(rng.choice(TEXT_ALPHABET) for _ in range(rng.randint(0, 40)))
            msg = Message(f"{chat_id}-{i:04d}", ts, sender, kind, text=text)
        else:
            filename = "".join(rng.choice(FILE_ALPHABET) for _ in range(rng.randint(1, 12)))
            duration = rng.randint(0, 600) if kind is MessageKind.AUDIO else None
            msg = Message(
                f"{chat_id}-{i:04d}", ts, sender, kind,
                attachment=AttachmentRef(filename, duration),
            )
        messages.append(msg)
    started = min(stamps) if stamps else random_timestamp(rng)
    last = max(stamps) if stamps else started
    return ChatDump(chat_id, participants, started, last, messages)


def random_case(rng: random.Random, n_chats: int | None = None) -> list[ChatDump]:
    pool = [ContactRef(random_name(rng), random_phone(rng)) for _ in range(6)]
    # a couple of shared display names so sameAs pairs appear
    if len(pool) >= 4:
        pool[3] = ContactRef(pool[0].display_name, pool[3].phone)
    chats = []
    for c in range(n_chats if n_chats is not None else rng.randint(1, 4)):
        k = rng.randint(1, min(4, len(pool)))
        chats.append(random_chat(rng, f"chat-{c}", rng.sample(pool, k)))
    return chats
