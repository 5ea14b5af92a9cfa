import streamlit as st

st.set_page_config(page_title="U-GNN Forecast Dashboard")
st.title("U-GNN Forecast Dashboard")
st.write(
    "Pick 'Forecast Fan' in the sidebar to browse sampled trajectories, "
    "or 'Metrics Report' to compare U-GNN against the GRW baseline."
)
st.caption("Artifacts come from `ugnn_cli.py sample` / `evaluate` / `benchmark`.")
