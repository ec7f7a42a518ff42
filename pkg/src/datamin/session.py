"""Dynamic personalized minimization: a question-answer protocol where each
disclosed generalized value narrows the options offered for other features.

Surviving clusters drive everything: an option is offered only if choosing it
distinguishes clusters, and adjacent regions no surviving cluster tells apart
are merged into one maximal option.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field

from .data_model import NUMERIC
from .document import DocumentRuntime
from .errors import SessionNotFoundError, SessionProtocolError
from .generalization import STATUS_UNTOUCHED

ANY_OPTION_ID = "any"


@dataclass(frozen=True)
class FeatureOption:
    id: str
    kind: str  # range | groups | any
    start: float | None = None
    end: float | None = None
    categories: tuple[str, ...] | None = None
    label: str = ""


@dataclass(frozen=True)
class FeatureOffer:
    feature: str
    status: str
    expects_exact_value: bool
    options: tuple[FeatureOption, ...]


@dataclass(frozen=True)
class AnswerRecord:
    feature: str
    status: str
    disclosed: dict  # {"range": {...}} | {"categories": [...]} | {"any": true} | {"value": ...}


@dataclass
class MinimizationSession:
    session_id: str
    surviving: frozenset[int]
    answered: dict[str, AnswerRecord] = field(default_factory=dict)
    offers: dict[str, FeatureOffer] = field(default_factory=dict)
    touched: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _any_option() -> FeatureOption:
    return FeatureOption(id=ANY_OPTION_ID, kind="any", label="prefer not to narrow")


def _cluster_interval(profile, j: int, domain) -> tuple[float, float]:
    c = profile.constraints.get(j)
    if c is None:
        return domain.lo, domain.hi
    return max(c.low, domain.lo), min(c.high, domain.hi)


def _cluster_allowed(profile, j: int, domain) -> tuple[str, ...]:
    c = profile.constraints.get(j)
    if c is None:
        return domain.values
    return c.allowed


class SessionEngine:
    """Builds offers, filters surviving clusters per answer, and finalizes a
    prediction from whatever was disclosed."""

    def __init__(self, runtime: DocumentRuntime, timeout: float = 1800.0, log_path=None):
        self.runtime = runtime
        self.timeout = timeout
        self._sessions: dict[str, MinimizationSession] = {}
        self._store_lock = threading.Lock()
        self._log_path = log_path
        self._log_lock = threading.Lock()
        self._profiles_by_id = {p.cluster_id: p for p in runtime.profiles}

    # --- offers ---------------------------------------------------------

    def _numeric_regions(self, j: int, surviving: frozenset[int]) -> list[FeatureOption]:
        domain = self.runtime.feature_schemas[j].domain
        intervals = [
            _cluster_interval(self._profiles_by_id[cid], j, domain) for cid in sorted(surviving)
        ]
        cuts = sorted(
            {v for low, high in intervals for v in (low, high) if domain.lo < v < domain.hi}
        )
        edges = [domain.lo] + cuts + [domain.hi]
        elementary = list(zip(edges, edges[1:]))

        def signature(a: float, b: float) -> frozenset[int]:
            return frozenset(
                cid
                for cid, (low, high) in zip(sorted(surviving), intervals)
                if low <= a and b <= high
            )

        regions: list[tuple[float, float, frozenset[int]]] = []
        for a, b in elementary:
            sig = signature(a, b)
            if not sig:
                continue  # no surviving cluster covers this slice of the domain
            if regions and regions[-1][2] == sig and regions[-1][1] == a:
                regions[-1] = (regions[-1][0], b, sig)
            else:
                regions.append((a, b, sig))

        if len(regions) <= 1:
            return [_any_option()]
        options = []
        for i, (a, b, _) in enumerate(regions):
            left = "[" if a <= domain.lo else "("
            options.append(
                FeatureOption(
                    id=f"o{i}", kind="range", start=a, end=b, label=f"{left}{a:g}, {b:g}]"
                )
            )
        options.append(_any_option())
        return options

    def _categorical_groups(self, j: int, surviving: frozenset[int]) -> list[FeatureOption]:
        domain = self.runtime.feature_schemas[j].domain
        allowed = {
            cid: set(_cluster_allowed(self._profiles_by_id[cid], j, domain))
            for cid in surviving
        }
        by_signature: dict[frozenset[int], list[str]] = {}
        order: list[frozenset[int]] = []
        for value in domain.values:
            sig = frozenset(cid for cid, vals in allowed.items() if value in vals)
            if not sig:
                continue
            if sig not in by_signature:
                by_signature[sig] = []
                order.append(sig)
            by_signature[sig].append(value)

        if len(order) <= 1:
            return [_any_option()]
        options = []
        for i, sig in enumerate(order):
            group = tuple(by_signature[sig])
            options.append(
                FeatureOption(
                    id=f"o{i}", kind="groups", categories=group, label=", ".join(group)
                )
            )
        options.append(_any_option())
        return options

    def compute_offers(self, surviving: frozenset[int], answered: dict) -> dict[str, FeatureOffer]:
        offers: dict[str, FeatureOffer] = {}
        for j, fs in enumerate(self.runtime.feature_schemas):
            if fs.name in answered:
                continue
            status = self.runtime.generalization.features[j].status
            if status == STATUS_UNTOUCHED:
                offers[fs.name] = FeatureOffer(
                    feature=fs.name,
                    status=status,
                    expects_exact_value=True,
                    options=(_any_option(),),
                )
                continue
            if fs.kind == NUMERIC:
                options = self._numeric_regions(j, surviving)
            else:
                options = self._categorical_groups(j, surviving)
            offers[fs.name] = FeatureOffer(
                feature=fs.name,
                status=status,
                expects_exact_value=False,
                options=tuple(options),
            )
        return offers

    # --- session lifecycle ------------------------------------------------

    def create(self) -> MinimizationSession:
        surviving = frozenset(p.cluster_id for p in self.runtime.profiles)
        session = MinimizationSession(session_id=uuid.uuid4().hex, surviving=surviving)
        session.offers = self.compute_offers(surviving, session.answered)
        with self._store_lock:
            self._purge()
            self._sessions[session.session_id] = session
        self._log("create", session)
        return session

    def get(self, session_id: str) -> MinimizationSession:
        with self._store_lock:
            self._purge()
            session = self._sessions.get(session_id)
            if session is None:
                raise SessionNotFoundError(f"unknown or expired session {session_id!r}")
            session.touched = time.monotonic()
            return session

    def _purge(self) -> None:
        now = time.monotonic()
        for sid in [
            sid for sid, s in self._sessions.items() if now - s.touched > self.timeout
        ]:
            del self._sessions[sid]

    # --- answering --------------------------------------------------------

    def answer(self, session_id: str, feature: str, option_id: str) -> MinimizationSession:
        session = self.get(session_id)
        with session.lock:
            j = self._feature_index(feature)
            if feature in session.answered:
                raise SessionProtocolError(f"feature {feature!r} was already answered")
            offer = session.offers.get(feature)
            if offer is None:
                raise SessionProtocolError(f"feature {feature!r} has no open offer")

            if option_id == ANY_OPTION_ID:
                disclosed = {"any": True}
                surviving = session.surviving
            elif offer.expects_exact_value:
                surviving, disclosed = self._filter_exact(j, option_id, session.surviving)
            else:
                option = next((o for o in offer.options if o.id == option_id), None)
                if option is None:
                    raise SessionProtocolError(
                        f"option {option_id!r} was not offered for {feature!r}"
                    )
                surviving, disclosed = self._filter_option(j, option, session.surviving)

            session.surviving = surviving
            session.answered[feature] = AnswerRecord(
                feature=feature, status=offer.status, disclosed=disclosed
            )
            session.offers = self.compute_offers(surviving, session.answered)
            self._log("answer", session, feature=feature, option_id=option_id)
            return session

    def _feature_index(self, feature: str) -> int:
        for j, fs in enumerate(self.runtime.feature_schemas):
            if fs.name == feature:
                return j
        raise SessionProtocolError(f"unknown feature {feature!r}")

    def _filter_exact(self, j: int, raw: str, surviving: frozenset[int]):
        fs = self.runtime.feature_schemas[j]
        if fs.kind == NUMERIC:
            try:
                value = float(raw)
            except ValueError:
                raise SessionProtocolError(f"{raw!r} is not a numeric value for {fs.name!r}")
            if not fs.domain.contains(value):
                raise SessionProtocolError(f"value {value} outside the domain of {fs.name!r}")
            kept = frozenset(
                cid
                for cid in surviving
                if self._interval_contains(self._profiles_by_id[cid], j, value)
            )
        else:
            if not fs.domain.contains(raw):
                raise SessionProtocolError(f"value {raw!r} outside the domain of {fs.name!r}")
            value = raw
            kept = frozenset(
                cid
                for cid in surviving
                if value in _cluster_allowed(self._profiles_by_id[cid], j, fs.domain)
            )
        if not kept:
            raise SessionProtocolError(
                f"value for {fs.name!r} is inconsistent with previous answers"
            )
        return kept, {"value": value}

    def _interval_contains(self, profile, j: int, value: float) -> bool:
        c = profile.constraints.get(j)
        if c is None:
            return True
        return c.contains(value, self.runtime.feature_schemas[j].domain)

    def _filter_option(self, j: int, option: FeatureOption, surviving: frozenset[int]):
        fs = self.runtime.feature_schemas[j]
        if option.kind == "range":
            kept = frozenset(
                cid
                for cid in surviving
                if self._covers_interval(self._profiles_by_id[cid], j, option.start, option.end)
            )
            disclosed = {"range": {"start": option.start, "end": option.end}}
        else:
            member = option.categories[0]
            kept = frozenset(
                cid
                for cid in surviving
                if member in _cluster_allowed(self._profiles_by_id[cid], j, fs.domain)
            )
            disclosed = {"categories": list(option.categories)}
        # options are built from surviving-cluster constraints, so this cannot empty
        return kept, disclosed

    def _covers_interval(self, profile, j: int, a: float, b: float) -> bool:
        domain = self.runtime.feature_schemas[j].domain
        low, high = _cluster_interval(profile, j, domain)
        return low <= a and b <= high

    # --- finalize -----------------------------------------------------------

    def finalize(self, session_id: str) -> tuple[str, list[dict]]:
        session = self.get(session_id)
        with session.lock:
            class_labels = self.runtime.tree.class_labels
            totals = {label: 0 for label in class_labels}
            for cid in session.surviving:
                for label, count in self._profiles_by_id[cid].class_counts.items():
                    totals[label] += count
            label = max(class_labels, key=lambda l: (totals[l], -class_labels.index(l)))

            transcript = []
            for fs in self.runtime.feature_schemas:
                record = session.answered.get(fs.name)
                if record is not None:
                    transcript.append(
                        {"feature": fs.name, "status": record.status, "disclosed": record.disclosed}
                    )
                else:
                    j = self._feature_index(fs.name)
                    status = self.runtime.generalization.features[j].status
                    transcript.append(
                        {"feature": fs.name, "status": status, "disclosed": {"any": True}}
                    )
            self._log("finalize", session, label=label)
            return label, transcript

    # --- optional append-only log --------------------------------------------

    def _log(self, event: str, session: MinimizationSession, **extra) -> None:
        if self._log_path is None:
            return
        entry = {
            "event": event,
            "session_id": session.session_id,
            "surviving": sorted(session.surviving),
            **extra,
        }
        with self._log_lock:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")
