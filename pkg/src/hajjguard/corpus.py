"""Dataset schema, ingestion, labeling and synthetic corpus generation.

The unit of everything downstream is :class:`AppRecord`: one mobile app's
store listing (Indonesian description, requested permissions, numeric
metadata) plus an optional official/unofficial label. Datasets are JSON
lines, one record per line. Labels come from a :class:`RegistrySnapshot`,
a local snapshot of the licensed-organizer registry.

Because no public labeled corpus exists, :func:`generate_synthetic` builds a
seeded dataset whose class-conditional distributions follow the documented
profile: official listings use formal service vocabulary and minimal
permissions, unofficial listings use discount-marketing vocabulary and
over-request sensitive permissions.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field, replace
from enum import IntEnum

from .errors import ConfigError, DatasetError

PERMISSION_RE = re.compile(r"^[A-Z][A-Z0-9_]*$")

#: Watchlist order is load-bearing: it fixes the permission-block slot order.
DEFAULT_WATCHLIST = (
    "READ_PHONE_STATE",
    "ACCESS_FINE_LOCATION",
    "READ_CONTACTS",
    "READ_SMS",
    "RECORD_AUDIO",
)

DEFAULT_FREE_EMAIL_DOMAINS = (
    "gmail.com",
    "yahoo.com",
    "yahoo.co.id",
    "hotmail.com",
    "outlook.com",
)

RATIONALE_NOT_REGISTERED = "not-registered"
RATIONALE_FREE_EMAIL = "free-email"
RATIONALE_RISKY_PERMISSIONS = "risky-permissions"


class Label(IntEnum):
    """Binary class. OFFICIAL is the positive class for all metrics."""

    OFFICIAL = 0
    UNOFFICIAL = 1


@dataclass(frozen=True)
class AppRecord:
    app_id: str
    name: str
    developer_name: str
    developer_email_domain: str
    description: str
    permissions: frozenset
    download_count: int
    rating: float
    size_mb: float
    days_since_update: int
    label: Label | None = None


@dataclass(frozen=True)
class RegistrySnapshot:
    """Local snapshot of the licensed-organizer registry.

    ``registered_names`` holds normalized agency names (see
    :func:`normalize_agency_name`); ``high_risk_permissions`` is the ordered
    permission watchlist.
    """

    registered_names: frozenset
    free_email_domains: frozenset
    high_risk_permissions: tuple


@dataclass(frozen=True)
class LabelDecision:
    label: Label
    rationale: tuple


@dataclass(frozen=True)
class SynonymMap:
    entries: dict

    def __post_init__(self):
        for token, repls in self.entries.items():
            if token != token.lower():
                raise ConfigError(f"synonym key {token!r} must be lowercase")
            if not repls:
                raise ConfigError(f"synonym key {token!r} has no replacements")
            if any(r != r.lower() for r in repls):
                raise ConfigError(f"replacements for {token!r} must be lowercase")
            if tuple(repls) == (token,):
                raise ConfigError(f"token {token!r} maps only to itself")


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    n_official: int
    n_unofficial: int
    official_vocab: dict
    unofficial_vocab: dict
    shared_vocab: dict
    p_highrisk_official: float
    p_highrisk_unofficial: float
    description_length_range: tuple
    noise_rate: float

    def validate(self):
        if self.n_official <= 0 or self.n_unofficial <= 0:
            raise ConfigError("class counts must be positive")
        for name in ("p_highrisk_official", "p_highrisk_unofficial", "noise_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        lo, hi = self.description_length_range
        if lo < 1 or lo > hi:
            raise ConfigError("description_length_range must satisfy 1 <= min <= max")
        for pool_name in ("official_vocab", "unofficial_vocab", "shared_vocab"):
            pool = getattr(self, pool_name)
            if not pool:
                raise ConfigError(f"{pool_name} must not be empty")
            if any(w <= 0 for w in pool.values()):
                raise ConfigError(f"{pool_name} weights must be positive")


def normalize_agency_name(name: str) -> str:
    """Case-fold, strip punctuation, collapse whitespace."""
    folded = name.lower()
    folded = re.sub(r"[^0-9a-z\s]+", " ", folded)
    return " ".join(folded.split())


def apply_labeling_criteria(record: AppRecord, registry: RegistrySnapshot) -> LabelDecision:
    """Label one record against the registry.

    Registration is the necessary primary criterion: a record is OFFICIAL
    exactly when its normalized developer name is registered. For an
    UNOFFICIAL verdict the rationale lists every secondary red flag that
    holds (free developer email, watchlisted permission requests) on top of
    the missing registration.
    """
    if not registry.registered_names:
        raise ConfigError("registry has no registered names")
    if normalize_agency_name(record.developer_name) in registry.registered_names:
        return LabelDecision(Label.OFFICIAL, ())
    rationale = [RATIONALE_NOT_REGISTERED]
    if record.developer_email_domain.lower() in registry.free_email_domains:
        rationale.append(RATIONALE_FREE_EMAIL)
    if record.permissions & set(registry.high_risk_permissions):
        rationale.append(RATIONALE_RISKY_PERMISSIONS)
    return LabelDecision(Label.UNOFFICIAL, tuple(rationale))


# ---------------------------------------------------------------------------
# JSON-lines dataset I/O

_REQUIRED_FIELDS = (
    "app_id", "name", "developer_name", "developer_email_domain",
    "description", "permissions", "download_count", "rating", "size_mb",
    "days_since_update",
)


def _parse_record(obj: dict, line_no: int) -> AppRecord:
    def fail(field_name, msg):
        raise DatasetError(msg, line=line_no, field=field_name)

    if not isinstance(obj, dict):
        raise DatasetError("record is not a JSON object", line=line_no)
    for name in _REQUIRED_FIELDS:
        if name not in obj:
            fail(name, "missing required field")

    def want_str(name):
        v = obj[name]
        if not isinstance(v, str):
            fail(name, f"expected string, got {type(v).__name__}")
        return v

    def want_int(name, minimum=0):
        v = obj[name]
        if isinstance(v, bool) or not isinstance(v, int):
            fail(name, f"expected integer, got {type(v).__name__}")
        if v < minimum:
            fail(name, f"must be >= {minimum}")
        return v

    def want_real(name):
        v = obj[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            fail(name, f"expected number, got {type(v).__name__}")
        return float(v)

    app_id = want_str("app_id")
    if not app_id:
        fail("app_id", "must be non-empty")
    perms = obj["permissions"]
    if not isinstance(perms, list) or any(not isinstance(p, str) for p in perms):
        fail("permissions", "expected an array of strings")
    for p in perms:
        if not PERMISSION_RE.match(p):
            fail("permissions", f"invalid permission identifier {p!r}")
    rating = want_real("rating")
    if not 0.0 <= rating <= 5.0:
        fail("rating", "must be within [0, 5]")
    size_mb = want_real("size_mb")
    if size_mb <= 0:
        fail("size_mb", "must be positive")
    label = None
    if "label" in obj and obj["label"] is not None:
        if obj["label"] not in (0, 1):
            fail("label", "must be 0 (official) or 1 (unofficial)")
        label = Label(obj["label"])
    return AppRecord(
        app_id=app_id,
        name=want_str("name"),
        developer_name=want_str("developer_name"),
        developer_email_domain=want_str("developer_email_domain"),
        description=want_str("description"),
        permissions=frozenset(perms),
        download_count=want_int("download_count"),
        rating=rating,
        size_mb=size_mb,
        days_since_update=want_int("days_since_update"),
        label=label,
    )


def load_dataset(path) -> list:
    """Parse a JSON-lines dataset file; order preserved.

    Raises :class:`DatasetError` naming the line and field for malformed
    records, and for duplicated ``app_id`` values.
    """
    records = []
    seen_ids = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON ({exc.msg})", line=line_no) from exc
            record = _parse_record(obj, line_no)
            if record.app_id in seen_ids:
                raise DatasetError(
                    f"duplicate app_id {record.app_id!r} (first seen on line "
                    f"{seen_ids[record.app_id]})",
                    line=line_no, field="app_id",
                )
            seen_ids[record.app_id] = line_no
            records.append(record)
    return records


def record_to_json(record: AppRecord) -> dict:
    obj = {
        "app_id": record.app_id,
        "name": record.name,
        "developer_name": record.developer_name,
        "developer_email_domain": record.developer_email_domain,
        "description": record.description,
        "permissions": sorted(record.permissions),
        "download_count": record.download_count,
        "rating": record.rating,
        "size_mb": record.size_mb,
        "days_since_update": record.days_since_update,
    }
    if record.label is not None:
        obj["label"] = int(record.label)
    return obj


def save_dataset(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_json(record), ensure_ascii=False) + "\n")


def clean_dataset(records) -> list:
    """Drop duplicate listings and blank descriptions.

    Two records are duplicates when they share (lowercased name, lowercased
    developer name); the first occurrence wins. Records whose description is
    empty after trimming are dropped. Idempotent, order preserving.
    """
    seen = set()
    out = []
    for record in records:
        if not record.description.strip():
            continue
        key = (record.name.lower(), record.developer_name.lower())
        if key in seen:
            continue
        seen.add(key)
        out.append(record)
    return out


def load_registry(path) -> RegistrySnapshot:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"invalid registry JSON ({exc.msg})") from exc
    for name in ("registered_names", "free_email_domains", "high_risk_permissions"):
        if name not in obj or not isinstance(obj[name], list):
            raise DatasetError("missing or non-array field", field=name)
    for p in obj["high_risk_permissions"]:
        if not isinstance(p, str) or not PERMISSION_RE.match(p):
            raise DatasetError(f"invalid permission identifier {p!r}",
                               field="high_risk_permissions")
    return RegistrySnapshot(
        registered_names=frozenset(normalize_agency_name(n) for n in obj["registered_names"]),
        free_email_domains=frozenset(d.lower() for d in obj["free_email_domains"]),
        high_risk_permissions=tuple(obj["high_risk_permissions"]),
    )


def save_registry(registry: RegistrySnapshot, path):
    obj = {
        "registered_names": sorted(registry.registered_names),
        "free_email_domains": sorted(registry.free_email_domains),
        "high_risk_permissions": list(registry.high_risk_permissions),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Synthetic corpus generation

# Fixed pool of registered agencies; doubles as the default registry content.
REGISTERED_AGENCIES = (
    "Amanah Mulia Wisata", "Barokah Safar Utama", "Cahaya Madinah Tour",
    "Arminia Travel Nusantara", "Hijrah Amanah Tour", "Safar Jaya Wisata",
    "Al Karim Umrah Service", "Permata Haramain Travel", "Mabrur Sejahtera Tour",
    "Darul Hijrah Wisata", "Annur Travel Utama", "Zamzam Berkah Wisata",
    "Talbiyah Tour Indonesia", "Raudhah Amanah Travel", "Bintang Haramain Wisata",
    "Salsabila Tour Madani", "Multazam Jaya Travel", "Arafah Mulia Tour",
    "Mina Sejahtera Wisata", "Labbaik Amanah Travel", "Firdaus Safar Tour",
    "Nurul Iman Wisata", "Assalam Berkah Travel", "Wadi Fatimah Tour",
    "Khazanah Umrah Mandiri", "Taqwa Madani Travel", "Ihsan Mulia Wisata",
    "Baitullah Sejahtera Tour", "Marwah Amanah Travel", "Shafa Berkah Wisata",
    "Harmain Mandiri Tour", "Ridho Ilahi Travel", "Mutiara Makkah Wisata",
    "Sakinah Safar Tour", "Barakah Madinah Travel", "Anugerah Haramain Tour",
)

_UNOFFICIAL_DEV_WORDS_A = (
    "Promo", "Murah", "Kilat", "Hemat", "Diskon", "Cepat", "Super", "Mega",
    "Express", "Flash", "Gebyar", "Bonus",
)
_UNOFFICIAL_DEV_WORDS_B = (
    "Umrah Store", "Travel Center", "Tour Corner", "Trip Studio", "Wisata Apps",
    "Holiday Dev", "Journey Lab", "Tiket Hub", "Paket Market", "Safari Digital",
)

_OFFICIAL_APP_PATTERNS = (
    "{agency}", "{agency} Mobile", "{agency} Official", "Umrah {agency}",
    "{agency} Jamaah App",
)
_UNOFFICIAL_APP_PATTERNS = (
    "Umrah Murah {word}", "Promo Haji {word}", "{word} Umrah Deal",
    "Paket Umrah {word}", "Haji Express {word}", "{word} Travel Promo",
)

DEFAULT_OFFICIAL_VOCAB = {
    "resmi": 14.0, "izin": 8.0, "kemenag": 8.0, "jamaah": 6.0, "ibadah": 5.0,
    "pelayanan": 5.0, "visa": 5.0, "terdaftar": 4.0, "amanah": 4.0,
    "bimbingan": 4.0, "manasik": 3.0, "pendaftaran": 3.0, "terpercaya": 3.0,
    "syariah": 3.0, "sah": 2.0, "paspor": 2.0,
}

DEFAULT_UNOFFICIAL_VOCAB = {
    "murah": 12.0, "promo": 10.0, "diskon": 8.0, "cepat": 5.0, "hemat": 4.0,
    "gratis": 4.0, "bonus": 3.0, "buruan": 3.0, "langsung": 3.0,
    "potongan": 3.0, "termurah": 3.0, "kilat": 2.0, "cicilan": 2.0,
    "kuota": 2.0, "terbatas": 2.0, "transfer": 2.0,
}

DEFAULT_SHARED_VOCAB = {
    "umrah": 9.0, "haji": 7.0, "paket": 6.0, "travel": 5.0, "perjalanan": 5.0,
    "jadwal": 4.0, "hotel": 4.0, "pesawat": 4.0, "tiket": 4.0, "harga": 4.0,
    "ziarah": 3.0, "makkah": 3.0, "madinah": 3.0,
}

DEFAULT_SYNONYMS = SynonymMap(entries={
    "mendaftar": ("registrasi",),
    "daftar": ("registrasi",),
    "resmi": ("sah",),
    "terpercaya": ("amanah",),
    "murah": ("hemat",),
    "cepat": ("kilat",),
    "diskon": ("potongan",),
    "gratis": ("percuma",),
})

_BENIGN_EXTRAS = (
    "CAMERA", "WRITE_EXTERNAL_STORAGE", "WAKE_LOCK", "VIBRATE",
    "RECEIVE_BOOT_COMPLETED", "POST_NOTIFICATIONS",
)

#: Relative request frequencies across the watchlist when an app turns out
#: high-risk; READ_PHONE_STATE and location lead by a wide margin.
_WATCHLIST_WEIGHTS = (0.50, 0.22, 0.15, 0.08, 0.05)

#: Fraction of listings whose description stays generic (shared travel
#: vocabulary only), the way terse real-world store listings do.
_GENERIC_LISTING_RATE = 0.12


def default_registry() -> RegistrySnapshot:
    """Registry snapshot matching the synthetic generator's agency pool."""
    return RegistrySnapshot(
        registered_names=frozenset(normalize_agency_name(n) for n in REGISTERED_AGENCIES),
        free_email_domains=frozenset(DEFAULT_FREE_EMAIL_DOMAINS),
        high_risk_permissions=DEFAULT_WATCHLIST,
    )


def default_generator_config(seed: int, n_official: int = 100, n_unofficial: int = 100,
                             p_highrisk_official: float = 0.15,
                             p_highrisk_unofficial: float = 0.85,
                             noise_rate: float = 0.12,
                             description_length_range: tuple = (7, 28)) -> GeneratorConfig:
    return GeneratorConfig(
        seed=seed,
        n_official=n_official,
        n_unofficial=n_unofficial,
        official_vocab=dict(DEFAULT_OFFICIAL_VOCAB),
        unofficial_vocab=dict(DEFAULT_UNOFFICIAL_VOCAB),
        shared_vocab=dict(DEFAULT_SHARED_VOCAB),
        p_highrisk_official=p_highrisk_official,
        p_highrisk_unofficial=p_highrisk_unofficial,
        description_length_range=description_length_range,
        noise_rate=noise_rate,
    )


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "", name.lower())


def _merge_pools(primary: dict, shared: dict):
    merged = dict(primary)
    for word, weight in shared.items():
        merged[word] = merged.get(word, 0.0) + weight
    words = tuple(merged)
    weights = tuple(merged[w] for w in words)
    return words, weights


def _draw_description(rng, length, own, opposite, shared, noise_rate) -> str:
    if rng.random() < _GENERIC_LISTING_RATE:
        shared_words, shared_weights = shared
        return " ".join(rng.choices(shared_words, weights=shared_weights, k=length))
    own_words, own_weights = own
    opp_words, opp_weights = opposite
    tokens = []
    for _ in range(length):
        if rng.random() < noise_rate:
            tokens.append(rng.choices(opp_words, weights=opp_weights, k=1)[0])
        else:
            tokens.append(rng.choices(own_words, weights=own_weights, k=1)[0])
    return " ".join(tokens)


def _draw_permissions(rng, official: bool, p_highrisk, watchlist) -> frozenset:
    perms = {"INTERNET"}
    if official or rng.random() < 0.7:
        perms.add("ACCESS_NETWORK_STATE")
    n_extra = rng.randint(0, 2) if official else rng.randint(0, 3)
    perms.update(rng.sample(_BENIGN_EXTRAS, n_extra))
    if rng.random() < p_highrisk:
        k = rng.randint(1, 3)
        # weighted sample without replacement (exponential-key trick)
        keys = sorted(watchlist,
                      key=lambda p: rng.random() ** (1.0 / _WATCHLIST_WEIGHTS[watchlist.index(p)]),
                      reverse=True)
        perms.update(keys[:k])
    return frozenset(perms)


def _official_record(rng, index, config, own, opposite, shared) -> AppRecord:
    agency = REGISTERED_AGENCIES[index % len(REGISTERED_AGENCIES)]
    pattern = rng.choice(_OFFICIAL_APP_PATTERNS)
    name = pattern.format(agency=agency)
    lo, hi = config.description_length_range
    return AppRecord(
        app_id=f"off-{index:04d}",
        name=name,
        developer_name=agency,
        developer_email_domain=f"{_slug(agency)}.co.id",
        description=_draw_description(rng, rng.randint(lo, hi), own, opposite,
                                      shared, config.noise_rate),
        permissions=_draw_permissions(rng, True, config.p_highrisk_official,
                                      DEFAULT_WATCHLIST),
        download_count=max(0, int(rng.lognormvariate(11.3, 1.05))),
        rating=round(min(5.0, max(0.0, rng.gauss(4.35, 0.35))), 1),
        size_mb=round(max(2.0, rng.gauss(33.0, 11.0)), 1),
        days_since_update=max(0, int(rng.lognormvariate(3.3, 0.7))),
        label=Label.OFFICIAL,
    )


def _unofficial_record(rng, index, config, own, opposite, shared) -> AppRecord:
    word_a = rng.choice(_UNOFFICIAL_DEV_WORDS_A)
    developer = f"{word_a} {rng.choice(_UNOFFICIAL_DEV_WORDS_B)}"
    name = rng.choice(_UNOFFICIAL_APP_PATTERNS).format(word=word_a)
    if rng.random() < 0.8:
        email = rng.choice(DEFAULT_FREE_EMAIL_DOMAINS)
    else:
        email = f"{_slug(developer)}.com"
    lo, hi = config.description_length_range
    return AppRecord(
        app_id=f"unf-{index:04d}",
        name=name,
        developer_name=developer,
        developer_email_domain=email,
        description=_draw_description(rng, rng.randint(lo, hi), own, opposite,
                                      shared, config.noise_rate),
        permissions=_draw_permissions(rng, False, config.p_highrisk_unofficial,
                                      DEFAULT_WATCHLIST),
        download_count=max(0, int(rng.lognormvariate(9.3, 1.2))),
        rating=round(min(5.0, max(0.0, rng.gauss(3.9, 0.55))), 1),
        size_mb=round(max(2.0, rng.gauss(33.0, 11.0)), 1),
        days_since_update=max(0, int(rng.lognormvariate(4.7, 0.8))),
        label=Label.UNOFFICIAL,
    )


def generate_synthetic(config: GeneratorConfig) -> list:
    """Emit ``n_official + n_unofficial`` labeled records, official block
    first. Deterministic for a fixed seed; each record draws from its own
    derived RNG stream so results cannot depend on evaluation order.

    Official developers always come from the registered-agency pool, so
    labeling the output against :func:`default_registry` reproduces the
    generated labels. Official records always request the INTERNET and
    ACCESS_NETWORK_STATE baseline.
    """
    config.validate()
    official_pool = _merge_pools(config.official_vocab, config.shared_vocab)
    unofficial_pool = _merge_pools(config.unofficial_vocab, config.shared_vocab)
    shared_pool = _merge_pools(config.shared_vocab, {})

    records = []
    for i in range(config.n_official):
        rng = random.Random(f"{config.seed}:off:{i}")
        records.append(_official_record(rng, i, config, official_pool,
                                        unofficial_pool, shared_pool))
    for i in range(config.n_unofficial):
        rng = random.Random(f"{config.seed}:unf:{i}")
        records.append(_unofficial_record(rng, i, config, unofficial_pool,
                                          official_pool, shared_pool))

    # Sequential disambiguation pass: keep (name, developer) pairs unique so
    # the output survives clean_dataset untouched.
    seen = set()
    for idx, record in enumerate(records):
        name = record.name
        n = 2
        while (name.lower(), record.developer_name.lower()) in seen:
            name = f"{record.name} {n}"
            n += 1
        if name != record.name:
            records[idx] = replace(record, name=name)
        seen.add((name.lower(), record.developer_name.lower()))
    return records


def augment_synonyms(records, synonym_map: SynonymMap, rate: float, seed: int,
                     stoplist=None, copies: int = 1) -> list:
    """Append synonym-replaced copies of ``records``.

    Each eligible token (not a stopword, present in the map) is replaced by a
    seeded-random synonym with probability ``rate``. Replacement is strictly
    one token for one token, labels are preserved, originals are returned
    unmodified, and copies get derived ids ``<orig>-aug<k>``.
    """
    if not 0.0 <= rate <= 1.0:
        raise ConfigError(f"augmentation rate must be in [0, 1], got {rate}")
    if copies < 0:
        raise ConfigError("copies must be >= 0")
    stop = stoplist if stoplist is not None else frozenset()
    out = list(records)
    for record in records:
        for k in range(1, copies + 1):
            rng = random.Random(f"{seed}:{record.app_id}:{k}")
            tokens = []
            for token in record.description.split():
                low = token.lower()
                if low in stop or low not in synonym_map.entries:
                    tokens.append(token)
                elif rng.random() < rate:
                    tokens.append(rng.choice(list(synonym_map.entries[low])))
                else:
                    tokens.append(token)
            out.append(replace(record,
                               app_id=f"{record.app_id}-aug{k}",
                               description=" ".join(tokens)))
    return out
