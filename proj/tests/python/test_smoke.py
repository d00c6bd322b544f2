import os
import subprocess

import numpy as np
import pytest

import mlembed

TOY = """# layer u v
a 0 1
a 1 2
a 2 0
a 2 3
b 0 1
b 1 2
b 2 3
b 3 0
"""


def test_parse_and_supra():
    net = mlembed.parse_network(TOY)
    assert net.num_layers == 2
    assert net.num_nodes == 4
    assert net.num_supra == 8
    assert net.edges(0) == [(0, 1), (0, 2), (1, 2), (2, 3)]
    assert mlembed.jaccard(net, 1, 0, 1) == 1.0
    assert mlembed.jaccard(net, 2, 0, 1) == pytest.approx(2 / 3)
    g = mlembed.build_supra(net, 0.1)
    assert g.num_intra_edges == 8
    assert g.network.num_supra == 8
    assert sum(s["retained"] for s in g.coupling_stats()) == g.num_inter_edges


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        mlembed.parse_network("0 5\n")
    with pytest.raises(OSError):
        mlembed.load_network("/nonexistent/edges.txt")
    with pytest.raises(ValueError):
        mlembed.build_supra(mlembed.parse_network(TOY), 1.5)


def test_embed_refine_and_scores():
    net, planted = mlembed.generate_sbm(nodes=30, p_in=0.6, seed=3)
    x = mlembed.embed(net, dim=16, walks_per_node=5, walk_length=20, epochs=2, seed=4)
    assert isinstance(x, np.ndarray)
    assert x.shape == (net.num_supra, 16)
    assert np.array_equal(x, mlembed.embed(net, dim=16, walks_per_node=5, walk_length=20, epochs=2, seed=4))

    g = mlembed.build_supra(net)
    out = mlembed.refine(x, g, clusters=3, max_outer_iters=3, pretrain_epochs=20)
    assert out["embeddings"].shape == x.shape
    assert len(out["labels"]) == net.num_supra
    assert mlembed.modularity(g, out["labels"]) == pytest.approx(out["final_quality"])
    assert 0.0 <= mlembed.nmi(out["labels"], planted) <= 1.0

    labels, centroids, inertia = mlembed.kmeans(x, 3, seed=1)
    assert centroids.shape == (3, 16)
    assert inertia >= 0.0

    nodes = mlembed.aggregate(x, net)
    assert nodes.shape == (30, 16)
    block = [planted[net.index_of(v, 0)] for v in range(30)]
    folds, mean = mlembed.node_classification(nodes, block, folds=3)
    assert len(folds) == 3
    assert 0.0 <= mean <= 100.0


def test_metrics():
    assert mlembed.auroc([0.8, 0.4], [0.6, 0.2]) == 0.75
    assert mlembed.nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)
    net, _ = mlembed.generate_sbm(nodes=24, p_in=0.6, seed=2)
    per_layer, mean = mlembed.link_prediction(net, folds=2, dim=8, walks_per_node=4, walk_length=10, epochs=1)
    assert len(per_layer) == 2
    assert all(0.0 <= a <= 1.0 for layer in per_layer for a in layer)
    assert 0.0 <= mean <= 1.0


@pytest.mark.skipif(not os.environ.get("MLEMBED_CLI"), reason="CLI path not provided")
def test_cli_help():
    result = subprocess.run([os.environ["MLEMBED_CLI"], "--help"], capture_output=True, text=True)
    assert result.returncode == 0
    assert "pipeline" in result.stdout
