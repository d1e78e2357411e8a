"""Regenerate reviews_860.csv, a stand-in for the shared-task training file.

The texts are invented hotel-review snippets; only the schema and the
(sentiment, dialect) counts mirror the real data: 430 rows per dialect with
154 positive, 168 negative and 108 neutral in each.

    python3 tests/fixtures/make_reviews_fixture.py
"""

import csv
from pathlib import Path

import numpy as np

COUNTS = {"Positive": 154, "Negative": 168, "Neutral": 108}
DIALECTS = ("Darija", "Saudi")

PHRASES = {
    ("Positive", "Darija"): ["الأوطيل زوين بزاف", "الخدمة مزيانة", "الفطور كان واعر", "غادي نرجع إن شاء الله"],
    ("Positive", "Saudi"): ["الفندق مره حلو", "الموظفين قمة في الأخلاق", "الغرفة نظيفة وواسعة", "أنصح فيه بقوة"],
    ("Negative", "Darija"): ["البيت كان موسخ", "الخدمة خايبة", "ما عجبنيش الحال", "الصداع طول الليل"],
    ("Negative", "Saudi"): ["الفندق سيء جدا", "التكييف خربان", "ما أنصح فيه أبدا", "الإزعاج طول الليل"],
    ("Neutral", "Darija"): ["الأوطيل عادي", "قريب من المحطة", "الثمن متوسط", "دوزنا فيه جوج ليالي"],
    ("Neutral", "Saudi"): ["الفندق عادي", "قريب من الحرم", "السعر متوسط", "جلسنا فيه ليلتين"],
}
ENDINGS = ["", "!", "!!", ".", "،", "؟", " :)"]


def build(seed=2025):
    rng = np.random.default_rng(seed)
    rows = []
    for dialect in DIALECTS:
        for sentiment, n in COUNTS.items():
            pool = PHRASES[(sentiment, dialect)]
            for _ in range(n):
                k = int(rng.integers(1, 4))
                picked = rng.choice(len(pool), size=k, replace=False)
                text = "، ".join(pool[i] for i in picked) + ENDINGS[int(rng.integers(len(ENDINGS)))]
                rows.append([sentiment, text, dialect])
    order = rng.permutation(len(rows))
    rows = [rows[i] for i in order]
    # pin the first-occurrence label order to positive, negative, neutral
    for slot, label in enumerate(COUNTS):
        j = next(i for i in range(slot, len(rows)) if rows[i][0] == label)
        rows[slot], rows[j] = rows[j], rows[slot]
    return [[f"AHS-{i + 1:04d}", *r] for i, r in enumerate(rows)]


def main():
    out = Path(__file__).with_name("reviews_860.csv")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["ID", "Sentiment", "Text", "Dialect"])
        w.writerows(build())
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
