#!/usr/bin/env python3
"""Writes the synthetic corpora, training set and authored LLM transcripts under data/."""

import argparse
import csv
import json
import random
import re
from pathlib import Path

from techniques import CLAUSES, EXTRAS, FILLER, SEASONS, TOP50

SEED = 20240611
MODELS = ["llama2-7b", "llama2-13b", "llama2-70b"]

NAMES = {tid: name for tid, name, _ in TOP50 + EXTRAS}

ACTORS = [
    ("The actor", "the actor"),
    ("The operators", "the operators"),
    ("The intruders", "the intruders"),
    ("The attackers", "the attackers"),
    ("The group", "the group"),
    ("The threat actor", "the threat actor"),
    ("The malware", "the malware"),
    ("The backdoor", "the backdoor"),
    ("The adversary", "the adversary"),
    ("The crew", "the crew"),
]
HOSTS = [
    "the domain controller", "a finance workstation", "the jump server", "several point-of-sale terminals",
    "the file server", "a developer laptop", "the mail server", "an accounting workstation",
]
TRAIN_FRAMES = [
    "{Actor} {clause}.", "After gaining a foothold, {actor} {clause}.", "In this campaign {actor} {clause}.",
    "Analysts found that {actor} {clause}.", "Later in the intrusion, {actor} {clause}.", "{Actor} also {clause}.",
    "During the operation {actor} {clause}.", "Logs showed that {actor} {clause}.",
    "To support the operation, {actor} {clause}.", "Once inside the network, {actor} {clause}.",
]
ATD_FRAMES = [
    "We observed that {actor} {clause}.", "In one incident {actor} {clause}.", "Next, {actor} {clause}.",
    "Investigators confirmed that {actor} {clause}.", "On the second day {actor} {clause}.",
    "At this stage {actor} {clause}.", "{Actor} then {clause}.", "Forensic evidence shows {actor} {clause}.",
]
AUG_FRAMES = [
    "A typical report notes that {actor} {clause}.", "Threat intelligence describes how {actor} {clause}.",
    "In a separate case {actor} {clause}.", "Responders documented that {actor} {clause}.",
    "It was reported that {actor} {clause}.", "One advisory states that {actor} {clause}.",
]
AEL_FRAMES = ["{Actor} {clause}.", "The emulated adversary {clause}.", "In this scenario {actor} {clause}."]

# Training sentences per class, in TOP50 order: skewed on purpose.
TRAIN_COUNTS = [150, 140, 110, 100, 90, 80, 70, 64, 60, 56, 52, 48, 44, 40, 38, 36, 34, 32, 30, 28, 26, 24,
                22, 22, 20, 20, 18, 18, 16, 16, 12, 14, 14, 12, 12, 10, 10, 10, 9, 9, 8, 8, 7, 7, 6, 6, 5, 5, 5, 4]

AEL_TRUTH = {
    "APT29": ["T1566.001", "T1204.002", "T1547.001"],
    "Carbanak": ["T1566.001", "T1059.003", "T1021.001", "T1113", "T1056.001", "T1070.004"],
    "FIN6": ["T1059.003", "T1105", "T1070.004", "T1027", "T1082", "T1071.001", "T1057", "T1083", "T1566.001",
             "T1547.001", "T1055", "T1033", "T1016", "T1053.005", "T1140", "T1112", "T1003.001", "T1005",
             "T1047", "T1078", "T1021.001", "T1569.002", "T1074.001", "T1041"],
    "FIN7": ["T1566.001", "T1204.002", "T1053.005", "T1105"],
    "menuPass": ["T1190", "T1078", "T1083", "T1074.001", "T1041"],
    "OilRig": ["T1071.001", "T1059.003", "T1082", "T1033"],
}
# Published per-report outcomes: (tp, fp, fn) for 7B, 13B, 70B.
PUBLISHED = {
    "APT29": [(1, 9, 2), (0, 10, 2), (3, 9, 0)],
    "Carbanak": [(5, 5, 1), (1, 8, 5), (3, 8, 3)],
    "FIN6": [(3, 7, 21), (0, 8, 24), (2, 19, 22)],
    "FIN7": [(0, 7, 4), (1, 14, 3), (2, 7, 2)],
    "menuPass": [(1, 5, 4), (1, 11, 4), (0, 12, 5)],
    "OilRig": [(3, 5, 1), (2, 5, 2), (2, 8, 2)],
}
PUBLISHED_MACRO = [("llama2-7b", "0.2403", "0.3736", "0.2733"), ("llama2-13b", "0.0911", "0.2792", "0.1199"),
                   ("llama2-70b", "0.1733", "0.4306", "0.2384")]

UNRESOLVED_ITEMS = [
    "Living off the land", "Credential theft from browsers", "Use of legitimate cloud storage", "Data destruction",
    "Supply chain compromise of vendors", "Lateral movement", "Defense evasion", "Social engineering of helpdesk staff",
    "Persistence via implants", "Reconnaissance of the victim", "Command and control", "Exfiltration to cloud storage",
    "Privilege escalation", "Anti-forensics", "Watering hole websites", "Fileless malware",
]
FAKE_IDS = [("T1999", "Credential Theft"), ("T1888.001", "Memory Scraping"), ("T1777", "Payment Card Harvesting"),
            ("T1666.002", "Cloud Beaconing"), ("T1950", "Data Staging Servers")]

# Sentence support per class in the annotated corpus.
ATD_SUPPORT = {
    "T1056.001": 37, "T1057": 46, "T1059.003": 79, "T1070.004": 76, "T1566.001": 48, "T1570": 16,
    "T1105": 12, "T1027": 8, "T1082": 10, "T1071.001": 9, "T1083": 7, "T1547.001": 6, "T1055": 6, "T1033": 8,
    "T1016": 5, "T1053.005": 7, "T1003.001": 6, "T1005": 5, "T1047": 4, "T1078": 6, "T1021.001": 7,
    "T1113": 5, "T1041": 4, "T1562.001": 5, "T1204.002": 6, "T1074.001": 4,
    "T1059.001": 6, "T1486": 4, "T1560.001": 5,
}
PAIRS = [("T1059.003", "T1070.004")] * 8 + [("T1057", "T1056.001")] * 3 + [("T1566.001", "T1204.002")] * 3
ATD_REPORTS = [("ATD-01", "Point-of-sale intrusion at a regional retailer"),
               ("ATD-02", "Banking trojan campaign against treasury staff"),
               ("ATD-03", "Hospitality sector breach"),
               ("ATD-04", "Ransomware precursor activity"),
               ("ATD-05", "Credential harvesting operation"),
               ("ATD-06", "Supply chain foothold and lateral spread"),
               ("ATD-07", "Payment processor compromise"),
               ("ATD-08", "Insurance broker intrusion")]

ATD_HEADINGS = ["Initial access", "Execution", "Discovery", "Collection", "Lateral movement", "Defense evasion",
                "Persistence", "Command and control"]


def normalize(text):
    return " ".join(re.findall(r"[a-z0-9]+", text.lower()))


def render(rng, frame, tid, clause=None):
    clause = clause or rng.choice(CLAUSES[tid])
    cap, low = rng.choice(ACTORS)
    return frame.format(Actor=cap, actor=low, clause=clause.format(host=rng.choice(HOSTS)))


def unique_sentences(rng, frames, tid, count, seen, attempts=20000):
    out = []
    for _ in range(attempts):
        if len(out) == count:
            break
        text = render(rng, rng.choice(frames), tid)
        key = normalize(text)
        if key in seen:
            continue
        seen.add(key)
        out.append(text)
    if len(out) != count:
        raise SystemExit(f"could not author {count} distinct sentences for {tid}")
    return out


def filler(rng):
    return rng.choice(FILLER).format(season=rng.choice(SEASONS), weeks=rng.randint(2, 9),
                                     year=rng.randint(2013, 2020))


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def catalog_lines():
    lines = [json.dumps({"catalog_version": "enterprise-v13.1"})]
    for rank, (tid, name, aliases) in enumerate(TOP50, start=1):
        rec = {"id": tid, "name": name, "rank": rank}
        if aliases:
            rec["aliases"] = aliases
        lines.append(json.dumps(rec))
    for tid, name, aliases in EXTRAS:
        rec = {"id": tid, "name": name}
        if aliases:
            rec["aliases"] = aliases
        lines.append(json.dumps(rec))
    return "\n".join(lines) + "\n"


def report_file(rid, title, source, labels, body, sentence_labels=None):
    out = [f"id: {rid}", f"title: {title}", f"source: {source}", "labels:"]
    out += [f"{tid}\t{NAMES[tid]}" for tid in sorted(labels)]
    if sentence_labels is not None:
        out.append("sentence-labels:")
        out += [f"{idx}\t{','.join(sorted(ids))}" for idx, ids in sentence_labels]
    out.append("---")
    return "\n".join(out) + "\n" + body


def ael_reports(rng):
    files = {}
    for rid, truth in AEL_TRUTH.items():
        paras = [f"This emulation plan describes activity attributed to {rid}. " + filler(rng)]
        sentences = []
        for i, tid in enumerate(truth):
            s = render(rng, rng.choice(AEL_FRAMES), tid)
            if i % 3 == 0:
                s = s[:-1] + f" ({tid})."
            sentences.append(s)
        for i in range(0, len(sentences), 4):
            paras.append(" ".join(sentences[i:i + 4]))
        paras.append("TLP:CLEAR")
        paras.append(f"Reference material is available at https://example.org/emulation/{rid.lower()}/ for analysts.")
        paras.append("Page 1 of 1")
        body = "\n\n".join(paras) + "\n"
        words = len(body.split())
        if words >= 480:
            raise SystemExit(f"{rid} has {words} words")
        files[rid] = report_file(rid, f"{rid} adversary emulation plan", "AEL", truth, body)

    # One long report exercises the word cap.
    truth = ["T1486", "T1059.001", "T1078", "T1021.001"]
    paras = ["This emulation plan covers a destructive intrusion set."]
    for _ in range(14):
        paras.append(" ".join(filler(rng) for _ in range(3)) + " " +
                     render(rng, rng.choice(AEL_FRAMES), rng.choice(truth)))
    files["Sandworm"] = report_file("Sandworm", "Sandworm adversary emulation plan", "AEL", truth,
                                    "\n\n".join(paras) + "\n")
    return files


def atd_label_sets(rng):
    remaining = dict(ATD_SUPPORT)
    sets = []
    for a, b in PAIRS:
        sets.append({a, b})
        remaining[a] -= 1
        remaining[b] -= 1
    for tid, n in sorted(remaining.items()):
        sets += [{tid}] * n
    rng.shuffle(sets)
    return sets


def atd_reports(rng, train_seen):
    label_sets = atd_label_sets(rng)
    buckets = [[] for _ in ATD_REPORTS]
    for i, labels in enumerate(label_sets):
        buckets[(i * 7 + i // 11) % len(ATD_REPORTS)].append(labels)

    seen = set(train_seen)
    files, manifest = {}, []
    for (rid, title), bucket in zip(ATD_REPORTS, buckets):
        sentences = []  # (text, labels) in body order
        for labels in bucket:
            ids = sorted(labels)
            for _ in range(200):
                if len(ids) == 1:
                    text = render(rng, rng.choice(ATD_FRAMES), ids[0])
                else:
                    c1 = rng.choice(CLAUSES[ids[0]]).format(host=rng.choice(HOSTS))
                    c2 = rng.choice(CLAUSES[ids[1]]).format(host=rng.choice(HOSTS))
                    text = render(rng, rng.choice(ATD_FRAMES), ids[0], f"{c1} and then {c2}")
                if normalize(text) not in seen:
                    break
            seen.add(normalize(text))
            sentences.append((text, labels))
            if rng.random() < 0.3:
                sentences.append((filler(rng), set()))

        paras = [(["TLP:AMBER"], False), ([f"{title}."], True)]
        heading = 0
        i = 0
        while i < len(sentences):
            if i % 18 == 0:
                paras.append(([ATD_HEADINGS[heading % len(ATD_HEADINGS)]], True))
                heading += 1
            n = rng.randint(3, 6)
            paras.append((sentences[i:i + n], True))
            i += n
            if rng.random() < 0.15:
                paras.append(([f"Page {rng.randint(2, 30)}"], False))
        paras.append((["Indicators of compromise:"], False))
        paras.append((["".join(rng.choice("0123456789abcdef") for _ in range(64)) for _ in range(3)], False))
        paras.append((["References"], True))
        paras.append(([f"https://intel.example.com/reports/{rid.lower()}"], False))

        body_paras, sentence_labels, index = [], [], 0
        for content, counted in paras:
            if not counted:
                body_paras.append("\n".join(content))
                continue
            texts = []
            for item in content:
                text, labels = item if isinstance(item, tuple) else (item, set())
                shown = text
                if labels and rng.random() < 0.12:
                    shown = text[:-1] + f" ({sorted(labels)[0]})."
                elif not labels and rng.random() < 0.1 and text.endswith("."):
                    shown = text[:-1] + f" (see https://blog.example.net/{rid.lower()}/{index})."
                texts.append(shown)
                if labels:
                    sentence_labels.append((index, labels))
                    # as read after ID scrubbing
                    seen_text = re.sub(r"T\d{4}(\.\d{3})?", "", shown)
                    manifest.append({"report_id": rid, "index": index, "text": seen_text, "labels": sorted(labels)})
                index += 1
            body_paras.append(" ".join(texts))
        doc_labels = set().union(*(labels for _, labels in sentence_labels))
        files[rid] = report_file(rid, title, "ATD", doc_labels, "\n\n".join(body_paras) + "\n", sentence_labels)
    return files, manifest


def training_set(rng):
    seen, rows = set(), []
    for (tid, _, _), count in zip(TOP50, TRAIN_COUNTS):
        for n, text in enumerate(unique_sentences(rng, TRAIN_FRAMES, tid, count, seen)):
            rows.append({"sentence_id": f"train:{tid}:{n:03d}", "report_id": f"tram-{(n % 40):02d}",
                         "text": text, "labels": [tid], "provenance": "ORIGINAL"})
    heavy = [tid for (tid, _, _), c in zip(TOP50, TRAIN_COUNTS) if c >= 60]
    for n in range(15):
        a, b = sorted(rng.sample(heavy, 2))
        text = render(rng, rng.choice(TRAIN_FRAMES), a,
                      rng.choice(CLAUSES[a]).format(host=rng.choice(HOSTS)) + " and then " +
                      rng.choice(CLAUSES[b]).format(host=rng.choice(HOSTS)))
        if normalize(text) in seen:
            continue
        seen.add(normalize(text))
        rows.append({"sentence_id": f"train:multi:{n:03d}", "report_id": "tram-multi", "text": text,
                     "labels": [a, b], "provenance": "ORIGINAL"})
    return rows, seen


def augment_pools(rng, train_rows, seen):
    pools = {}
    by_class = {}
    for row in train_rows:
        if len(row["labels"]) == 1:
            by_class.setdefault(row["labels"][0], []).append(row["text"])
    for (tid, _, _), count in zip(TOP50, TRAIN_COUNTS):
        if count >= 40:
            continue
        lines = unique_sentences(rng, AUG_FRAMES, tid, 30, seen)
        lines.insert(1, by_class[tid][0])
        pools[tid] = lines
    return pools


def transcript(rng, model_index, rid, tp, fp):
    truth = AEL_TRUTH[rid]
    order = list(truth)
    rng.shuffle(order)
    hits = order[:tp]
    pool = [tid for tid, _, _ in TOP50 + EXTRAS if tid not in truth]
    rng.shuffle(pool)
    n_resolved = (fp * 3 + 4) // 5
    wrong = pool[:n_resolved]
    unresolved = rng.sample(UNRESOLVED_ITEMS, fp - n_resolved)
    fakes = list(FAKE_IDS)
    rng.shuffle(fakes)

    items = [("hit", t) for t in hits] + [("wrong", t) for t in wrong] + [("free", u) for u in unresolved]
    rng.shuffle(items)
    lines = []
    if model_index == 0:
        lines.append("Sure! Here are the MITRE ATT&CK techniques I found in the report:")
        lines.append("")
        for n, (kind, value) in enumerate(items, start=1):
            lines.append(f"{n}. {value} - {NAMES[value]}" if kind != "free" else f"{n}. {value}")
        lines.append("")
        lines.append("I hope this helps!")
    elif model_index == 1:
        lines.append("Based on the report, the following techniques were used:")
        for kind, value in items:
            if kind == "free" and fakes and rng.random() < 0.5:
                fid, fname = fakes.pop()
                lines.append(f"* {fname} ({fid})")
            elif kind == "free":
                lines.append(f"* {value}")
            elif rng.random() < 0.5:
                lines.append(f"* {NAMES[value]}")
            else:
                lines.append(f"* {NAMES[value]} ({value})")
    else:
        lines.append("The report describes the following ATT&CK techniques:")
        lines.append("")
        for kind, value in items:
            lines.append(f"- **{value}: {NAMES[value]}**" if kind != "free" else f"- **{value}**")
        lines.append("")
        lines.append("Let me know if you would like more detail on any of these.")
    return "\n".join(lines) + "\n"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[2] / "data")
    args = parser.parse_args()
    out = args.out
    rng = random.Random(SEED)

    write(out / "catalog" / "techniques.jsonl", catalog_lines())

    for rid, text in ael_reports(rng).items():
        write(out / "ael" / f"{rid}.txt", text)

    train_rows, seen = training_set(rng)
    write(out / "train" / "train.jsonl", "".join(json.dumps(r) + "\n" for r in train_rows))

    files, manifest = atd_reports(rng, seen)
    for rid, text in files.items():
        write(out / "atd" / f"{rid}.txt", text)
    write(out / "atd" / "manifest.jsonl", "".join(json.dumps(m) + "\n" for m in manifest))

    for tid, lines in augment_pools(rng, train_rows, seen).items():
        write(out / "fixtures" / "authored" / "augment" / f"{tid}.txt", "\n".join(lines) + "\n")

    for rid, outcomes in PUBLISHED.items():
        for m, (model, (tp, fp, _)) in enumerate(zip(MODELS, outcomes)):
            write(out / "fixtures" / "authored" / "zeroshot" / model / f"{rid}.txt", transcript(rng, m, rid, tp, fp))

    ref = out / "reference"
    ref.mkdir(parents=True, exist_ok=True)
    with open(ref / "llama2_counts.csv", "w", newline="\n", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "report", "ground_truth", "tp", "fp", "fn"])
        for m, model in enumerate(MODELS):
            for rid, outcomes in PUBLISHED.items():
                tp, fp, fn = outcomes[m]
                w.writerow([model, rid, len(AEL_TRUTH[rid]), tp, fp, fn])
    with open(ref / "llama2_macro.csv", "w", newline="\n", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "precision", "recall", "f1"])
        w.writerows(PUBLISHED_MACRO)


if __name__ == "__main__":
    main()
