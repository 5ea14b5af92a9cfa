import streamlit as st

from eval_suite.fan_chart import fan_data, plotly_fan
from eval_suite.metrics import ensemble_scores
from pages.dashboard_io import RUNS_DIR, list_csv, load_ensembles, mtime

# ---- PAGE ----
st.set_page_config(layout="wide")
st.title("📈 Forecast Fan")

files = list_csv("ensembles")
if not files:
    st.info(f"No ensemble CSVs under `{RUNS_DIR}/`. Run `ugnn_cli.py sample` first.")
    st.stop()

# ---- INPUTS ----
names = [str(p.relative_to(RUNS_DIR)) for p in files]
left, right = st.columns(2)
main_name = left.selectbox("U-GNN ensembles", names)
grw_name = right.selectbox("GRW ensembles (optional)", ["(none)"] + names)

main_path = files[names.index(main_name)]
ensembles = load_ensembles(str(main_path), mtime(main_path))
grw_all = {}
if grw_name != "(none)":
    grw_path = files[names.index(grw_name)]
    grw_all = load_ensembles(str(grw_path), mtime(grw_path))

window = st.selectbox("Window", sorted(ensembles))
ens = ensembles[window]
node = st.slider("Stock", 0, ens.n_nodes - 1, 0)
shown = st.slider("Trajectories shown", 1, ens.n_traj, min(10, ens.n_traj))

# ---- CHART ----
grw = grw_all.get(window)
fig = plotly_fan(fan_data(ens, node, grw, n_shown=shown), title=f"Window {window}, stock {node}")
st.plotly_chart(fig, use_container_width=True)

# ---- SCORES ----
if ens.target is not None:
    cols = st.columns(2)
    cols[0].caption("U-GNN (this window, all stocks)")
    cols[0].json({k: round(v, 5) for k, v in ensemble_scores(ens).items()})
    if grw is not None:
        cols[1].caption("GRW (this window, all stocks)")
        cols[1].json({k: round(v, 5) for k, v in ensemble_scores(grw).items()})
