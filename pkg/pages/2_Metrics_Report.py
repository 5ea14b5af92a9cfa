import plotly.express as px
import streamlit as st

from eval_suite.report import pivot_report, relative_to
from pages.dashboard_io import RUNS_DIR, list_csv, load_report, mtime

st.set_page_config(layout="wide")
st.title("📊 Metrics Report")

files = list_csv("metrics")
if not files:
    st.info(f"No metrics CSVs under `{RUNS_DIR}/`. Run `ugnn_cli.py evaluate` or `benchmark` first.")
    st.stop()

names = [str(p.relative_to(RUNS_DIR)) for p in files]
choice = st.selectbox("Report", names)
path = files[names.index(choice)]
report = load_report(str(path), mtime(path))

st.subheader("Lower is better")
st.dataframe(pivot_report(report), use_container_width=True, hide_index=True)

report = report.assign(setup=report["T_p"].astype(str) + "/" + report["T_h"].astype(str))
fig = px.bar(
    report, x="setup", y="value", color="model", facet_col="metric",
    barmode="group", labels={"setup": "T_p / T_h"},
    color_discrete_map={"U-GNN": "#27ae60", "GRW": "#e74c3c"},
)
fig.update_yaxes(matches=None, showticklabels=True)
st.plotly_chart(fig, use_container_width=True)

if report["model"].nunique() > 1 and "GRW" in set(report["model"]):
    ratio = relative_to(report, "GRW").rename("ratio to GRW").reset_index()
    st.subheader("Relative to GRW")
    st.dataframe(ratio, use_container_width=True, hide_index=True)

with st.expander("Download"):
    st.download_button("metrics.csv", path.read_bytes(), file_name=path.name, mime="text/csv")
