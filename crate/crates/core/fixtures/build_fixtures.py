"""Writes the sample paper, deck and annotations, plus manifest.json with
counts computed independently of the Rust code."""

import json
import math
import re
from pathlib import Path

HERE = Path(__file__).parent

SECTIONS = [
    ("", "Abstract", [
        "Interactive map viewers request thousands of small raster tiles per session.",
        "We present an adaptive tile cache that predicts the next viewport from recent pan and zoom gestures.",
        "The cache admits a tile only when its predicted reuse outweighs the cost of evicting a resident tile.",
        "On three public map traces the adaptive cache raises the hit rate by eleven points over LRU.",
        "Median tile latency drops from 48 ms to 19 ms at the same memory budget.",
    ]),
    ("1", "Introduction", [
        "Web maps split the world into a pyramid of square image tiles.",
        "Every pan or zoom gesture triggers requests for the tiles that enter the viewport.",
        "Rendering a tile from vector data is expensive, so servers and clients keep rendered tiles in a cache.",
        "Most deployed caches use least recently used eviction without any knowledge of user motion.",
        "User motion on a map is far from random.",
        "People pan along roads and coastlines and zoom toward places they already looked at.",
        "This regularity suggests that the next viewport can be predicted from the last few gestures.",
        "We build on that observation and design a cache that reasons about future viewports.",
        "Our first contribution is a lightweight trajectory model for viewport prediction.",
        "Our second contribution is an admission policy that rejects tiles with low predicted reuse.",
        "We evaluate both ideas on traces from three public map services.",
    ]),
    ("2", "Background", [
        "This section reviews how tiles are organised and how caches replace them.",
        "Readers familiar with tile servers may skip to the method.",
    ]),
    ("2.1", "Tile Pyramids", [
        "A tile pyramid stores the map at a series of zoom levels.",
        "At zoom level z the world is covered by a grid of two to the power z tiles per side.",
        "Each tile is addressed by its zoom level, column and row.",
        "A viewport of typical size touches between twelve and thirty tiles.",
        "Zooming in by one level replaces each visible tile with four children.",
        "Panning shifts the grid so that one row or column leaves while another enters.",
        "Tiles near the viewport border are therefore the most likely to be requested next.",
        "Popular regions such as city centres receive a large share of all requests.",
    ]),
    ("2.2", "Cache Replacement Policies", [
        "A cache replacement policy decides which resident item to evict when space runs out.",
        "LRU evicts the item whose last access is oldest.",
        "LFU evicts the item with the fewest accesses.",
        "Adaptive policies such as ARC balance recency and frequency online.",
        "None of these policies use the spatial structure of map requests.",
        "A tile adjacent to the current viewport is likely to be requested soon even if it was never seen.",
        "Conversely a tile far behind the direction of motion is unlikely to return.",
        "Spatial knowledge can therefore improve both eviction and admission.",
    ]),
    ("3", "Method", [
        "The adaptive cache has two components.",
        "A predictor estimates the probability that each tile will be requested within a short horizon.",
        "An admission controller uses these probabilities to decide which tiles enter the cache.",
        "Figure 1 shows how the components interact with the tile server.",
    ]),
    ("3.1", "Access Prediction", [
        "The predictor keeps a short history of viewport centres and zoom levels.",
        "From this history it estimates velocity and zoom direction.",
        "It then extrapolates the viewport a few hundred milliseconds ahead.",
        "Tiles covered by the extrapolated viewport receive high request probability.",
        "Tiles near the extrapolated border receive a smaller probability that decays with distance.",
        "Tiles already in view keep a baseline probability because users often return to them.",
        "The predictor runs in constant time per gesture.",
        "It needs no training data and no server-side state.",
        "When motion stops the prediction collapses to the current viewport.",
        "This behaviour avoids wasting cache space during idle periods.",
    ]),
    ("3.1.1", "Viewport Trajectories", [
        "A viewport trajectory is the sequence of viewport centres over time.",
        "We smooth the trajectory with an exponential moving average.",
        "The smoothing factor trades responsiveness against noise from jittery touch input.",
        "A factor of one half worked well across all traces.",
        "Sharp turns are detected when the heading changes by more than ninety degrees.",
        "After a sharp turn the history is reset so that stale motion does not mislead the predictor.",
    ]),
    ("3.2", "Admission Control", [
        "Classic caches admit every requested item.",
        "Under heavy panning this floods the cache with tiles that are seen once and never again.",
        "Our admission controller compares the predicted reuse of a new tile with that of the eviction victim.",
        "The new tile is admitted only if its predicted reuse is higher.",
        "Rejected tiles are still served to the client but are not stored.",
        "Admission control protects popular tiles from being pushed out by transient traffic.",
        "The comparison costs one probability lookup per request.",
        "Figure 2 illustrates a pan gesture where admission control keeps the city centre resident.",
    ]),
    ("4", "Experiments", [
        "We compare the adaptive cache with LRU, LFU and ARC.",
        "All policies share the same memory budget.",
        "We report hit rate and median tile latency.",
        "Every configuration is replayed five times and we report the mean.",
    ]),
    ("4.1", "Datasets", [
        "We use request traces from three public map services.",
        "The first trace comes from a city tourism portal with heavy zooming.",
        "The second trace comes from a hiking map with long continuous pans.",
        "The third trace comes from a delivery dispatch tool with frequent jumps between distant places.",
        "Together the traces contain about forty million tile requests.",
        "Table 1 summarises the traces.",
        "We hold out the last week of each trace for testing.",
    ]),
    ("4.2", "Results", [
        "The adaptive cache achieves the highest hit rate on all three traces.",
        "On the hiking trace the gain over LRU reaches fifteen points.",
        "The gain is smallest on the dispatch trace because jumps are hard to predict.",
        "Admission control alone accounts for roughly half of the improvement.",
        "Median tile latency falls from 48 ms to 19 ms.",
        "Figure 3 plots hit rate against cache size for every policy.",
        "The adaptive cache with half the memory matches LRU with the full budget.",
        "Prediction overhead stays below one percent of request time.",
        "Performance degrades gracefully when the smoothing factor is mistuned.",
        "These results confirm that user motion is a strong signal for tile caching.",
    ]),
    ("5", "Related Work", [
        "Prefetching for maps has been studied since the first slippy map viewers.",
        "Earlier systems prefetch a fixed ring of tiles around the viewport.",
        "Fixed rings waste bandwidth when the user moves in one direction.",
        "Learned prefetchers use recurrent networks trained on large request logs.",
        "Such models are accurate but require training data for each service.",
        "Web caching research has proposed many admission filters based on request frequency.",
        "Our admission filter differs by using spatial predictions instead of counts.",
        "To our knowledge no prior cache combines trajectory prediction with admission control for tiles.",
    ]),
    ("6", "Conclusion", [
        "We presented an adaptive tile cache driven by viewport prediction.",
        "The cache combines a constant-time trajectory predictor with a reuse-based admission controller.",
        "It improves hit rate and latency on three real traces without any training.",
        "Future work will extend the predictor to three-dimensional scenes.",
        "We also plan to share predictions between server and client caches.",
        "Code and traces are available from the authors.",
    ]),
]

FIGURES = [
    {"id": "fig1", "kind": "figure", "caption": "Architecture of the adaptive tile cache with predictor and admission controller", "uri": "img/fig1.png"},
    {"id": "fig2", "kind": "figure", "caption": "Admission control during a pan gesture keeps popular tiles resident", "uri": "img/fig2.png"},
    {"id": "fig3", "kind": "figure", "caption": "Hit rate versus cache size for LRU, LFU, ARC and the adaptive cache", "uri": "img/fig3.png"},
    {"id": "tab1", "kind": "table", "caption": "Statistics of the three map request traces used in the experiments", "uri": "img/tab1.png"},
]

PAPER = {
    "paper_id": "tilecache",
    "title": "Adaptive Tile Caching with Viewport Prediction",
    "sections": [{"label": l, "header": h, "sentences": s} for l, h, s in SECTIONS],
    "figures": FIGURES,
}

SLIDES = [
    ("Adaptive Tile Caching with Viewport Prediction", [
        "Map viewers request thousands of tiles per session",
        "Predict the next viewport from pan and zoom gestures",
        "Hit rate up eleven points over LRU",
    ], []),
    ("Introduction", [
        "Web maps are pyramids of square tiles",
        "Deployed caches use LRU and ignore user motion",
        "User motion on a map is far from random",
        "I first got interested in this while commuting",
    ], []),
    ("Tile Pyramids", [
        "Zoom level z has two to the power z tiles per side",
        "A viewport touches twelve to thirty tiles",
        "Border tiles are requested next",
    ], []),
    ("Access Prediction", [
        "Estimate velocity and zoom direction from recent viewports",
        "Extrapolate the viewport a few hundred milliseconds ahead",
        "Constant time per gesture, no training data",
    ], ["fig1"]),
    ("Admission Control", [
        "Admit a tile only if its predicted reuse beats the victim",
        "Rejected tiles are served but not stored",
        "Protects popular tiles from transient traffic",
    ], ["fig2"]),
    ("Datasets", [
        "Three public map request traces",
        "About forty million tile requests",
        "Last week of each trace held out",
    ], ["tab1"]),
    ("Results", [
        "Highest hit rate on all three traces",
        "Median latency falls from 48 ms to 19 ms",
        "Half the memory matches LRU with the full budget",
        "Thanks to the hiking club for the traces",
    ], ["fig3"]),
    ("Take-home messages", [
        "Motion is a strong signal for tile caching",
        "Prediction plus admission control beats LRU",
    ], []),
    ("Questions?", [], []),
]

DECK = {
    "deck_id": "tilecache",
    "slides": [{"index": i, "title": t, "lines": c, "figures": f} for i, (t, c, f) in enumerate(SLIDES)],
}

UNDERIVABLE = {
    "I first got interested in this while commuting",
    "Thanks to the hiking club for the traces",
}


def tokenize(s):
    return [t.lower() for t in re.split(r"[^0-9A-Za-z]+", s) if t]


def parent_label(label, labels):
    parts = label.split(".")
    while len(parts) > 1:
        parts = parts[:-1]
        cand = ".".join(parts)
        if cand in labels:
            return cand
    return None


def main():
    (HERE / "sample_paper.json").write_text(json.dumps(PAPER, indent=2) + "\n")
    (HERE / "sample_deck.json").write_text(json.dumps(DECK, indent=2) + "\n")

    rows = ["deck_id,slide_index,line_index,label"]
    for i, (_, lines, _) in enumerate(SLIDES):
        for j, line in enumerate(lines):
            rows.append(f"tilecache,{i},{j},{0 if line in UNDERIVABLE else 1}")
    (HERE / "annotations.csv").write_text("\n".join(rows) + "\n")

    labels = [l for l, _, _ in SECTIONS if l]
    parents = {l: parent_label(l, set(labels)) for l in labels}
    snippets = [math.ceil(len(s) / 4) for _, _, s in SECTIONS]
    n_slides = len(SLIDES)
    manifest = {
        "sections": len(SECTIONS),
        "sentences": sum(len(s) for _, _, s in SECTIONS),
        "snippets": sum(snippets),
        "snippets_per_section": snippets,
        "figures": len(FIGURES),
        "parents": parents,
        "roots": [l for l in labels if parents[l] is None],
        "descendants_of_3": [l for l in labels if l.startswith("3.")],
        "slides": n_slides,
        "content_lines": sum(len(c) for _, c, _ in SLIDES),
        "underivable_lines": len(UNDERIVABLE),
        "avg_title_len": sum(len(tokenize(t)) for t, _, _ in SLIDES) / n_slides,
        "avg_content_len": sum(len(tokenize(l)) for _, c, _ in SLIDES for l in c) / n_slides,
        "paper_tokens": sum(len(tokenize(x)) for _, _, s in SECTIONS for x in s),
    }
    (HERE / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
