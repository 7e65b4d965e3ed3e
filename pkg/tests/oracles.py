"""Independent naive reference implementations used to cross-check the package.

Everything here is written deliberately plainly (explicit loops, substring
enumeration, per-definition arithmetic) and must stay independent of the
production code paths it checks.
"""

from __future__ import annotations


def substring_found(haystack: str, needle: str) -> bool:
    """Naive substring scan; no use of `in` to stay independent."""
    n, m = len(haystack), len(needle)
    if m == 0 or m > n:
        return m == 0
    for i in range(n - m + 1):
        if haystack[i : i + m] == needle:
            return True
    return False


def naive_scores(query_text, query_modalities, history, descriptors, window):
    """Re-derive raw and normalized routing scores from first principles.

    history: list of (text_or_None, set_of_modality_values) per turn, oldest
    first. descriptors: list of (model_id, keywords, required_modalities,
    weight_text, weight_modality) in registration order.
    """
    recent = history[-window:] if window > 0 else []
    parts = []
    if query_text:
        parts.append(query_text)
    for text, _ in recent:
        if text:
            parts.append(text)
    corpus = "\n".join(parts).lower()

    if query_modalities:
        present = set(query_modalities)
    else:
        present = set()
        for _, mods in recent:
            present |= set(mods)

    raw = {}
    for model_id, keywords, required, w_text, w_mod in descriptors:
        if keywords:
            found = 0
            for kw in keywords:
                if substring_found(corpus, kw):
                    found += 1
            frac = found / len(keywords)
        else:
            frac = 0.0
        if required and set(required).issubset(present):
            match = 1.0
        else:
            match = 0.0
        raw[model_id] = w_text * frac + w_mod * match

    total = sum(raw.values())
    if total > 0:
        normalized = {k: v / total for k, v in raw.items()}
    else:
        normalized = {k: 0.0 for k in raw}
    return raw, normalized


def naive_select(normalized_in_order, threshold):
    """Argmax over (model_id, prob) pairs in registration order; None below threshold."""
    best_id = None
    best_p = None
    for model_id, p in normalized_in_order:
        if best_p is None or p > best_p:
            best_id, best_p = model_id, p
    if best_id is None or best_p < threshold:
        return None
    return best_id


def naive_resolve(query_resources, history_turns, accepted):
    """Most-recent-compatible-turn fallback, re-stated as explicit scans.

    query_resources: list of (resource_id, modality_value).
    history_turns: list of (index, [(resource_id, modality_value), ...]).
    Returns (list_of_resource_ids, fallback_index_or_None).
    """
    acc = set(accepted)
    current = [rid for rid, mod in query_resources if mod in acc]
    if current:
        return current, None
    best = None
    for index, resources in history_turns:
        hits = [rid for rid, mod in resources if mod in acc]
        if hits and (best is None or index > best[1]):
            best = (hits, index)
    if best is None:
        return [], None
    return best[0], best[1]


def _normalize_surface(s: str) -> str:
    return " ".join(s.lower().split())


def _is_word_boundary(text: str, pos: int) -> bool:
    if pos <= 0 or pos >= len(text):
        return True
    return not (text[pos - 1].isalnum() and text[pos].isalnum())


def naive_annotations(text: str, alias_index: dict[str, str]):
    """All-substrings candidate enumeration, then leftmost-longest tiling.

    alias_index maps normalized alias -> entity id. Returns a list of
    (start, end, entity_id) triples.
    """
    n = len(text)
    candidates = []
    for i in range(n):
        if text[i].isspace() or not _is_word_boundary(text, i):
            continue
        for j in range(i + 1, n + 1):
            if text[j - 1].isspace() or not _is_word_boundary(text, j):
                continue
            key = _normalize_surface(text[i:j])
            if key in alias_index:
                candidates.append((i, j, alias_index[key]))

    chosen = []
    cursor = 0
    while True:
        viable = [c for c in candidates if c[0] >= cursor]
        if not viable:
            break
        start = min(c[0] for c in viable)
        at_start = [c for c in viable if c[0] == start]
        best = max(at_start, key=lambda c: c[1])
        chosen.append(best)
        cursor = best[1]
    return chosen


def naive_metrics(labels, counts):
    """Accuracy, per-label precision/recall/F1, macro aggregates, per definition."""
    n = len(labels)
    total = 0
    for row in counts:
        for c in row:
            total += c
    diag = 0
    for i in range(n):
        diag += counts[i][i]
    accuracy = diag / total

    per_label = {}
    occurring = []
    for i, label in enumerate(labels):
        row_sum = sum(counts[i][j] for j in range(n))
        col_sum = sum(counts[j][i] for j in range(n))
        tp = counts[i][i]
        p = tp / col_sum if col_sum > 0 else 0.0
        r = tp / row_sum if row_sum > 0 else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        per_label[label] = (p, r, f1)
        if row_sum > 0:
            occurring.append((p, r, f1))

    if occurring:
        macro_p = sum(m[0] for m in occurring) / len(occurring)
        macro_r = sum(m[1] for m in occurring) / len(occurring)
        macro_f1 = sum(m[2] for m in occurring) / len(occurring)
    else:
        macro_p = macro_r = macro_f1 = 0.0
    return accuracy, per_label, (macro_p, macro_r, macro_f1)
