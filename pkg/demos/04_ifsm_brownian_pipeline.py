# Base path -> wavelet IFSM -> fixed point, with the collage bound and a replay.

# %%
import tempfile
from pathlib import Path

from ifsm_bm import replay, run_pipeline

# %%
for M in (1, 2, 4, 6):
    s = run_pipeline(seed=42, M=M, n=1024).manifest.summary
    print(
        f"M={M}: delta2 {s['delta2']:.3e}  C {s['contractivity']:.3f}  "
        f"d(base, fp) {s['l2_distance']:.4f} <= bound {s['collage_bound']:.4f}"
    )

# %%
run = run_pipeline(seed=42, M=6, n=1024)
out = Path(tempfile.mkdtemp()) / "run"
run.output().write(out)
print(sorted(p.name for p in out.iterdir()))

# %%
again = replay(run.manifest)
print("replay identical:", again.files["ifsm.csv"] == (out / "ifsm.csv").read_text())
