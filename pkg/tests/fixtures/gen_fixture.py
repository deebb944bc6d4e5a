"""Generate the synthetic 'acme' fixture case.

Run from the repository root:  python tests/fixtures/gen_fixture.py

The outputs under tests/fixtures/case_acme/ are checked in; this script
exists so the fixture stays auditable and regenerable. manifest.json holds
hand-derived expectations; every number there can be re-counted from the
message plans below.
"""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

import sys

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from casekit.ingest import (  # noqa: E402
    AttachmentRef,
    ChatDump,
    ContactRef,
    Message,
    MessageKind,
    derive_sameas,
    parse_text_dump,
    serialize_tabular_dump,
    serialize_text_dump,
)

OUT = Path(__file__).resolve().parent / "case_acme"

MARIO_1 = ContactRef("Mario Rossi", "+393331110001")
LUCIA = ContactRef("Lucia Verdi", "+393331110002")
STEVE = ContactRef("Steve Brown", "+393331110003")
ANNA = ContactRef("Anna Bianchi", "+393331110004")
MARIO_2 = ContactRef("Mario Rossi", "+393335550005")  # second phone, sameAs

FILLER = [
    "ok",
    "ciao",
    "thanks a lot",
    "sounds good",
    "see you soon",
    "all fine here",
    "perfect",
    "on my way",
    "done",
    "call me later",
    "sure thing",
    "no problem",
    "talk soon",
    "got it",
    "will do",
]

TRANSCRIPTS = {
    "voice-0001.opus": "the shipment arrives at the warehouse on Monday",
    "voice-0002.opus": "tell Steve Brown that the documents are ready",
    "voice-0003.opus": "Anna Bianchi will send the invoice to Acme Corp",
    "voice-0004.opus": "Mario Rossi arrived in Boston on 3 June",
}

# (kind, payload) per planned message; None payload picks the next filler
ACME1_PLAN: list[tuple[str, object]] = [
    ("TEXT", "ask Mario Rossi about the offer"),
    ("TEXT", None),
    ("TEXT", "Lucia Verdi will join too"),
    ("TEXT", None),
    ("TEXT", "let's plan the meeting for Friday"),
    ("TEXT", None),
    ("TEXT", None),
    ("AUDIO", ("voice-0001.opus", 12)),
    ("TEXT", None),
    ("TEXT", "the meeting went well"),
    ("TEXT", None),
    ("TEXT", None),
    ("TEXT", "flight to Milan on 2024-05-12"),
    ("TEXT", None),
    ("IMAGE", "photo-0001.jpg"),
    ("TEXT", None),
    ("TEXT", "Acme Corp sent the offer"),
    ("TEXT", None),
    ("TEXT", None),
    ("TEXT", "pay 200 € for the samples"),
    ("DOC", "contract.pdf"),
] + [("TEXT", None)] * 29  # 50 total

ACME2_PLAN: list[tuple[str, object]] = [
    ("TEXT", "Steve Brown should check the numbers"),
    ("TEXT", None),
    ("TEXT", "I spoke with steve this morning"),
    ("TEXT", None),
    ("TEXT", "Tom wants a copy"),
    ("AUDIO", ("voice-0002.opus", 31)),
    ("TEXT", None),
    ("TEXT", "Anna Bianchi agreed"),
    ("TEXT", None),
    ("TEXT", "the Globex tender closes 12/05/2024"),
    ("TEXT", None),
    ("AUDIO", ("voice-0003.opus", 44)),
    ("TEXT", "team meeting at the office"),
    ("TEXT", None),
    ("IMAGE", "photo-0002.jpg"),
    ("TEXT", "budget is 1500 euros"),
] + [("TEXT", None)] * 24  # 40 total

ACME3_PLAN: list[tuple[str, object]] = [
    ("TEXT", "Mario Rossi called twice"),
    ("TEXT", None),
    ("TEXT", "is Steve Brown coming?"),
    ("AUDIO", ("voice-0004.opus", 9)),
    ("TEXT", None),
    ("TEXT", "tell Lucia Verdi about the delivery on 12 May 2024"),
    ("TEXT", None),
    ("IMAGE", "photo-0003.jpg"),
    ("TEXT", "don't forget the meeting tomorrow"),
    ("TEXT", None),
    ("TEXT", "Boston office confirmed"),
] + [("TEXT", None)] * 19  # 30 total


def _build_chat(
    chat_id: str,
    participants: list[ContactRef],
    plan: list[tuple[str, object]],
    base: datetime,
    step_minutes: int,
) -> ChatDump:
    messages = []
    filler_iter = 0
    for i, (kind_name, payload) in enumerate(plan):
        ts = base + timedelta(minutes=i * step_minutes)
        sender = participants[i % len(participants)]
        kind = MessageKind(kind_name)
        if kind is MessageKind.TEXT:
            text = payload
            if text is None:
                text = FILLER[filler_iter % len(FILLER)]
                filler_iter += 1
            msg = Message(f"{chat_id}-{i:04d}", ts, sender, kind, text=text)
        elif kind is MessageKind.AUDIO:
            filename, duration = payload
            msg = Message(
                f"{chat_id}-{i:04d}",
                ts,
                sender,
                kind,
                attachment=AttachmentRef(filename, duration),
            )
        else:
            msg = Message(
                f"{chat_id}-{i:04d}", ts, sender, kind, attachment=AttachmentRef(payload)
            )
        messages.append(msg)
    return ChatDump(
        chat_id=chat_id,
        participants=participants,
        started=messages[0].timestamp,
        last_activity=messages[-1].timestamp,
        messages=messages,
    )


def build_case() -> list[ChatDump]:
    utc = timezone.utc
    return [
        _build_chat(
            "acme-1", [MARIO_1, LUCIA], ACME1_PLAN, datetime(2024, 3, 1, 9, 0, tzinfo=utc), 7
        ),
        _build_chat(
            "acme-2",
            [MARIO_2, STEVE, ANNA],
            ACME2_PLAN,
            datetime(2024, 3, 2, 10, 0, tzinfo=utc),
            11,
        ),
        _build_chat(
            "acme-3", [LUCIA, STEVE], ACME3_PLAN, datetime(2024, 3, 3, 8, 30, tzinfo=utc), 13
        ),
    ]


KB_TSV = """\
loc:boston\tBoston\tcity in Massachusetts, United States\tLOC
loc:milan\tMilan\tcity in northern Italy\tLOC
loc:springfield\tSpringfield\tcity name shared by many places\tLOC
org:acme\tAcme Corp\tindustrial supplies company\tORG
org:globex\tGlobex\tinternational trading conglomerate\tORG
org:initech\tInitech\tsoftware consulting firm\tORG
"""

GAZETTEER_TSV = """\
steve\tPER
Tom\tPER
"""

MANIFEST = {
    "case_id": "acme",
    "chats": 3,
    "messages": 120,
    "messages_per_chat": {"acme-1": 50, "acme-2": 40, "acme-3": 30},
    "contacts": 5,
    "persons": 4,
    "sameas_pairs": [["+393331110001", "+393335550005"]],
    "attachments": {"total": 8, "img": 3, "audio": 4, "doc": 1},
    "audio_files": sorted(TRANSCRIPTS),
    "keyword_meeting": {"messages": 4, "chats": ["acme-1", "acme-2", "acme-3"]},
    "audio_only_keyword": "warehouse",
    "audio_only_keyword_chat": "acme-1",
    "mentions": {
        "PER": {"text": 9, "audio": 3},
        "ORG": {"text": 2, "audio": 1},
        "LOC": {"text": 2, "audio": 1},
        "DATE": {"text": 3, "audio": 1},
        "MONEY": {"text": 2, "audio": 0},
        "MISC": {"text": 0, "audio": 0},
    },
    # link outcomes under the shipped default models; each individual decision
    # was reviewed by hand (all linked mentions point at the correct entity,
    # 'steve' and 'Tom' have no KB counterpart)
    "extraction": {
        "PER": {"linked": 10, "nil": 2, "entities": 6},
        "ORG": {"linked": 3, "nil": 0, "entities": 2},
        "LOC": {"linked": 3, "nil": 0, "entities": 2},
    },
    "nil_cluster_members": {"NIL-1": ["steve"], "NIL-2": ["Tom"]},
}


def main() -> None:
    chats = build_case()
    assert sum(len(c.messages) for c in chats) == 120

    OUT.mkdir(parents=True, exist_ok=True)
    dump_text = serialize_text_dump(chats)
    (OUT / "acme.dump").write_text(dump_text, encoding="utf-8")

    reparsed = parse_text_dump(dump_text)
    assert not reparsed.skipped and not reparsed.warnings

    chats_csv, messages_csv = serialize_tabular_dump(reparsed.chats)
    (OUT / "acme_chats.csv").write_bytes(chats_csv)
    (OUT / "acme_messages.csv").write_bytes(messages_csv)

    pairs = derive_sameas(reparsed.chats)
    assert [[p.phone_a, p.phone_b] for p in pairs] == MANIFEST["sameas_pairs"]

    media = OUT / "media"
    media.mkdir(exist_ok=True)
    for filename, transcript in TRANSCRIPTS.items():
        (media / filename).write_bytes(b"OggS\x00casekit-fixture:" + filename.encode())
        (media / filename).with_suffix(".txt").write_text(transcript + "\n", encoding="utf-8")

    (OUT / "kb.tsv").write_text(KB_TSV, encoding="utf-8")
    (OUT / "gazetteer.tsv").write_text(GAZETTEER_TSV, encoding="utf-8")
    (OUT / "manifest.json").write_text(
        json.dumps(MANIFEST, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"fixture written to {OUT}")


if __name__ == "__main__":
    main()
