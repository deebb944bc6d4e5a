"""Parsers for chat-dump exports.

Two stand-in export formats are supported: a line-oriented text dump and a
two-file CSV pair (chats + messages). Both normalize into the same ChatDump
structures, so downstream stages never care which forensic tool produced the
input. Malformed chat blocks are skipped and reported, never fatal.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .errors import EmptyDumpError, HeaderError, PhoneError, SyntaxDumpError

MSG_ORDINAL_WIDTH = 4

CHATS_CSV_HEADER = ["chat_id", "participants", "started", "last"]
MESSAGES_CSV_HEADER = [
    "chat_id",
    "timestamp",
    "sender_phone",
    "sender_name",
    "kind",
    "text",
    "attachment",
    "duration_s",
]

_CHAT_HEADER_RE = re.compile(r"^=== CHAT ([A-Za-z0-9-]+) ===$")
_PHONE_RE = re.compile(r"^\+\d{7,15}$")
_CONTACT_RE = re.compile(r"^(?P<name>.*) <(?P<phone>[^<>]+)>$")
_MESSAGE_RE = re.compile(
    r"^\[(?P<ts>[^\]]+)\] (?P<phone>\S+) \((?P<name>.*?)\) "
    r"(?P<kind>TEXT|AUDIO|IMAGE|VIDEO|DOC): (?P<body>.*)$"
)
_AUDIO_BODY_RE = re.compile(r"^(?P<file>.+) duration=(?P<dur>\d+)s$")


class MessageKind(str, Enum):
    TEXT = "TEXT"
    AUDIO = "AUDIO"
    IMAGE = "IMAGE"
    VIDEO = "VIDEO"
    DOC = "DOC"


@dataclass(frozen=True)
class ContactRef:
    display_name: str
    phone: str


@dataclass(frozen=True)
class AttachmentRef:
    filename: str
    duration_s: int | None = None


@dataclass(frozen=True)
class Message:
    msg_id: str
    timestamp: datetime
    sender: ContactRef
    kind: MessageKind
    text: str | None = None
    attachment: AttachmentRef | None = None


@dataclass
class ChatDump:
    chat_id: str
    participants: list[ContactRef]
    started: datetime
    last_activity: datetime
    messages: list[Message]


@dataclass(frozen=True)
class SameAsPair:
    phone_a: str
    phone_b: str
    evidence: str = "SAME_DISPLAY_NAME"


@dataclass(frozen=True)
class SkipReport:
    line: int
    reason: str


@dataclass
class ParseResult:
    """Parsed chats plus skip reports for blocks/rows that did not make it."""

    chats: list[ChatDump] = field(default_factory=list)
    skipped: list[SkipReport] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def message_count(self) -> int:
        return sum(len(c.messages) for c in self.chats)


def normalize_phone(raw: str) -> str:
    """Normalize a phone number to +<7..15 digits> (E.164 shape)."""
    if not raw:
        raise PhoneError("empty phone")
    s = re.sub(r"[ .\-()]", "", raw)
    if s.startswith("00"):
        s = "+" + s[2:]
    if not s.startswith("+"):
        s = "+" + s
    digits = s[1:]
    if not digits.isdigit():
        raise PhoneError(f"non-digit residue in {raw!r}")
    if not 7 <= len(digits) <= 15:
        raise PhoneError(f"{raw!r} has {len(digits)} digits, expected 7-15")
    return "+" + digits


def parse_timestamp(raw: str) -> datetime:
    """Parse an ISO-8601 timestamp into an aware UTC datetime."""
    s = raw.strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(s)
    except ValueError as exc:
        raise ValueError(f"bad timestamp {raw!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    """Canonical UTC ISO-8601 text with a Z suffix."""
    ts = ts.astimezone(timezone.utc)
    return ts.isoformat().replace("+00:00", "") + "Z"


def escape_text(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n")


def unescape_text(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def _msg_id(chat_id: str, ordinal: int) -> str:
    return f"{chat_id}-{ordinal:0{MSG_ORDINAL_WIDTH}d}"


def _finalize_chat(
    chat_id: str,
    participants: list[ContactRef],
    started: datetime,
    last: datetime,
    raw_messages: list[Message],
    warnings: list[str],
) -> ChatDump:
    """Sort messages (stable, so ties keep file order) and assign ids."""
    ordered = sorted(raw_messages, key=lambda m: m.timestamp)
    messages = []
    declared = {p.phone for p in participants}
    for i, m in enumerate(ordered):
        if m.sender.phone not in declared:
            warnings.append(
                f"chat {chat_id}: sender {m.sender.phone} not in declared participants"
            )
        messages.append(
            Message(
                msg_id=_msg_id(chat_id, i),
                timestamp=m.timestamp,
                sender=m.sender,
                kind=m.kind,
                text=m.text,
                attachment=m.attachment,
            )
        )
    return ChatDump(
        chat_id=chat_id,
        participants=participants,
        started=started,
        last_activity=last,
        messages=messages,
    )


def _parse_contact(raw: str) -> ContactRef:
    m = _CONTACT_RE.match(raw.strip())
    if not m:
        raise ValueError(f"bad contact {raw!r}")
    name = m.group("name").strip()
    if not name:
        raise ValueError(f"contact without name: {raw!r}")
    return ContactRef(display_name=name, phone=normalize_phone(m.group("phone")))


def _parse_message_line(line: str) -> Message:
    m = _MESSAGE_RE.match(line)
    if not m:
        raise ValueError("expected '[<iso8601>] <phone> (<name>) <KIND>: ...'")
    ts = parse_timestamp(m.group("ts"))
    sender = ContactRef(
        display_name=m.group("name").strip(), phone=normalize_phone(m.group("phone"))
    )
    kind = MessageKind(m.group("kind"))
    body = m.group("body")
    if kind is MessageKind.TEXT:
        return Message("", ts, sender, kind, text=unescape_text(body))
    if kind is MessageKind.AUDIO:
        am = _AUDIO_BODY_RE.match(body)
        if not am:
            # filenames may themselves contain " duration=", so match greedily
            # from the right; if nothing matches the suffix the line is bad
            raise ValueError("AUDIO body must end with ' duration=<int>s'")
        att = AttachmentRef(filename=am.group("file"), duration_s=int(am.group("dur")))
        return Message("", ts, sender, kind, attachment=att)
    if not body:
        raise ValueError(f"{kind.value} body must name a file")
    return Message("", ts, sender, kind, attachment=AttachmentRef(filename=body))


def _parse_chat_block(lines: list[str], start_line: int, warnings: list[str]) -> ChatDump:
    """Parse one chat block. Raises SyntaxDumpError with the offending line."""

    def need(idx: int, what: str) -> str:
        if idx >= len(lines):
            raise SyntaxDumpError(start_line + len(lines), what)
        return lines[idx]

    header = _CHAT_HEADER_RE.match(need(0, "chat header"))
    if not header:
        raise SyntaxDumpError(start_line, "'=== CHAT <id> ==='")
    chat_id = header.group(1)

    part_line = need(1, "'PARTICIPANTS: ...'")
    if not part_line.startswith("PARTICIPANTS: "):
        raise SyntaxDumpError(start_line + 1, "'PARTICIPANTS: '")
    try:
        participants = [
            _parse_contact(tok) for tok in part_line[len("PARTICIPANTS: "):].split("; ")
        ]
    except (ValueError, PhoneError) as exc:
        raise SyntaxDumpError(start_line + 1, f"contact list ({exc})") from exc
    if not participants:
        raise SyntaxDumpError(start_line + 1, "at least one participant")

    started_line = need(2, "'STARTED: ...'")
    if not started_line.startswith("STARTED: "):
        raise SyntaxDumpError(start_line + 2, "'STARTED: '")
    try:
        started = parse_timestamp(started_line[len("STARTED: "):])
    except ValueError as exc:
        raise SyntaxDumpError(start_line + 2, str(exc)) from exc

    last_line = need(3, "'LAST: ...'")
    if not last_line.startswith("LAST: "):
        raise SyntaxDumpError(start_line + 3, "'LAST: '")
    try:
        last = parse_timestamp(last_line[len("LAST: "):])
    except ValueError as exc:
        raise SyntaxDumpError(start_line + 3, str(exc)) from exc
    if started > last:
        raise SyntaxDumpError(start_line + 3, "LAST >= STARTED")

    raw_messages = []
    for off, line in enumerate(lines[4:], start=4):
        if not line:
            continue
        try:
            raw_messages.append(_parse_message_line(line))
        except (ValueError, PhoneError) as exc:
            raise SyntaxDumpError(start_line + off, str(exc)) from exc

    return _finalize_chat(chat_id, participants, started, last, raw_messages, warnings)


def parse_text_dump(raw: str) -> ParseResult:
    """Parse a text-format dump into chats plus skip reports.

    Chat blocks that fail to parse are skipped and reported with the line
    number of the failure; EmptyDumpError is raised only when the input
    contains no chat header at all.
    """
    lines = raw.split("\n")
    starts = [i for i, line in enumerate(lines) if _CHAT_HEADER_RE.match(line)]
    if not starts:
        raise EmptyDumpError("no chat blocks found")

    result = ParseResult()
    seen_ids: set[str] = set()
    bounds = starts + [len(lines)]
    for bi in range(len(starts)):
        lo, hi = bounds[bi], bounds[bi + 1]
        block = lines[lo:hi]
        try:
            chat = _parse_chat_block(block, lo + 1, result.warnings)
        except SyntaxDumpError as exc:
            result.skipped.append(SkipReport(line=exc.line, reason=str(exc)))
            continue
        if chat.chat_id in seen_ids:
            result.skipped.append(
                SkipReport(line=lo + 1, reason=f"duplicate chat id {chat.chat_id!r}")
            )
            continue
        seen_ids.add(chat.chat_id)
        result.chats.append(chat)
    return result


def serialize_text_dump(chats: list[ChatDump]) -> str:
    """Write chats back to the canonical text format (round-trip safe)."""
    out: list[str] = []
    for chat in chats:
        out.append(f"=== CHAT {chat.chat_id} ===")
        out.append(
            "PARTICIPANTS: "
            + "; ".join(f"{p.display_name} <{p.phone}>" for p in chat.participants)
        )
        out.append(f"STARTED: {format_timestamp(chat.started)}")
        out.append(f"LAST: {format_timestamp(chat.last_activity)}")
        for m in chat.messages:
            prefix = f"[{format_timestamp(m.timestamp)}] {m.sender.phone} ({m.sender.display_name}) "
            if m.kind is MessageKind.TEXT:
                body = f"TEXT: {escape_text(m.text or '')}"
            elif m.kind is MessageKind.AUDIO:
                assert m.attachment is not None
                body = f"AUDIO: {m.attachment.filename} duration={m.attachment.duration_s}s"
            else:
                assert m.attachment is not None
                body = f"{m.kind.value}: {m.attachment.filename}"
            out.append(prefix + body)
    return "\n".join(out) + ("\n" if out else "")


def _check_header(got: list[str] | None, want: list[str], which: str) -> None:
    if got is None or [c.strip() for c in got] != want:
        raise HeaderError(f"{which} header must be exactly {','.join(want)}")


def parse_tabular_dump(chats_csv: bytes, messages_csv: bytes) -> ParseResult:
    """Parse the two-CSV export into the same structures as parse_text_dump."""
    result = ParseResult()

    chats_reader = csv.reader(io.StringIO(chats_csv.decode("utf-8")))
    rows = list(chats_reader)
    _check_header(rows[0] if rows else None, CHATS_CSV_HEADER, "chats.csv")

    declared: dict[str, tuple[list[ContactRef], datetime, datetime]] = {}
    order: list[str] = []
    for rowno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            if len(row) != len(CHATS_CSV_HEADER):
                raise ValueError(f"expected {len(CHATS_CSV_HEADER)} columns")
            chat_id, participants_cell, started_raw, last_raw = row
            if not re.fullmatch(r"[A-Za-z0-9-]+", chat_id):
                raise ValueError(f"bad chat id {chat_id!r}")
            participants = [
                _parse_contact(tok) for tok in participants_cell.split(";") if tok.strip()
            ]
            if not participants:
                raise ValueError("empty participant list")
            started = parse_timestamp(started_raw)
            last = parse_timestamp(last_raw)
            if started > last:
                raise ValueError("last < started")
            if chat_id in declared:
                raise ValueError(f"duplicate chat id {chat_id!r}")
        except (ValueError, PhoneError) as exc:
            result.skipped.append(SkipReport(line=rowno, reason=f"chats.csv: {exc}"))
            continue
        declared[chat_id] = (participants, started, last)
        order.append(chat_id)

    messages_reader = csv.reader(io.StringIO(messages_csv.decode("utf-8")))
    mrows = list(messages_reader)
    _check_header(mrows[0] if mrows else None, MESSAGES_CSV_HEADER, "messages.csv")

    per_chat: dict[str, list[Message]] = {cid: [] for cid in order}
    for rowno, row in enumerate(mrows[1:], start=2):
        if not row:
            continue
        try:
            if len(row) != len(MESSAGES_CSV_HEADER):
                raise ValueError(f"expected {len(MESSAGES_CSV_HEADER)} columns")
            chat_id, ts_raw, phone, name, kind_raw, text, attachment, duration = row
            if chat_id not in per_chat:
                raise ValueError(f"unknown chat id {chat_id!r}")
            kind = MessageKind(kind_raw)
            sender = ContactRef(display_name=name.strip(), phone=normalize_phone(phone))
            ts = parse_timestamp(ts_raw)
            if kind is MessageKind.TEXT:
                msg = Message("", ts, sender, kind, text=text)
            else:
                if not attachment:
                    raise ValueError(f"{kind.value} row without attachment")
                dur = int(duration) if duration else None
                if (kind is MessageKind.AUDIO) != (dur is not None):
                    raise ValueError("duration_s present iff kind=AUDIO")
                msg = Message(
                    "", ts, sender, kind, attachment=AttachmentRef(attachment, dur)
                )
        except (ValueError, PhoneError) as exc:
            result.skipped.append(SkipReport(line=rowno, reason=f"messages.csv: {exc}"))
            continue
        per_chat[chat_id].append(msg)

    for chat_id in order:
        participants, started, last = declared[chat_id]
        result.chats.append(
            _finalize_chat(
                chat_id, participants, started, last, per_chat[chat_id], result.warnings
            )
        )
    return result


def serialize_tabular_dump(chats: list[ChatDump]) -> tuple[bytes, bytes]:
    """Write chats to the two-CSV format (RFC-4180 via the csv module)."""
    chats_buf = io.StringIO()
    cw = csv.writer(chats_buf, lineterminator="\n")
    cw.writerow(CHATS_CSV_HEADER)
    for chat in chats:
        cw.writerow(
            [
                chat.chat_id,
                ";".join(f"{p.display_name} <{p.phone}>" for p in chat.participants),
                format_timestamp(chat.started),
                format_timestamp(chat.last_activity),
            ]
        )

    messages_buf = io.StringIO()
    mw = csv.writer(messages_buf, lineterminator="\n")
    mw.writerow(MESSAGES_CSV_HEADER)
    for chat in chats:
        for m in chat.messages:
            mw.writerow(
                [
                    chat.chat_id,
                    format_timestamp(m.timestamp),
                    m.sender.phone,
                    m.sender.display_name,
                    m.kind.value,
                    m.text or "",
                    m.attachment.filename if m.attachment else "",
                    "" if not m.attachment or m.attachment.duration_s is None
                    else str(m.attachment.duration_s),
                ]
            )
    return chats_buf.getvalue().encode("utf-8"), messages_buf.getvalue().encode("utf-8")


def _name_key(name: str) -> str:
    return " ".join(name.split()).casefold()


def derive_sameas(dumps: list[ChatDump]) -> list[SameAsPair]:
    """Pair up distinct phones that share a normalized display name."""
    by_name: dict[str, set[str]] = {}
    for chat in dumps:
        refs = list(chat.participants) + [m.sender for m in chat.messages]
        for ref in refs:
            by_name.setdefault(_name_key(ref.display_name), set()).add(ref.phone)

    pairs: set[SameAsPair] = set()
    for phones in by_name.values():
        ordered = sorted(phones)
        for i in range(len(ordered)):
            for j in range(i + 1, len(ordered)):
                pairs.add(SameAsPair(phone_a=ordered[i], phone_b=ordered[j]))
    return sorted(pairs, key=lambda p: (p.phone_a, p.phone_b))
