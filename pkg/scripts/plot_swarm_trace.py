# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#       jupytext_version: 1.18.1
#   kernelspec:
#     display_name: .venv
#     language: python
#     name: python3
# ---

# %%
from pathlib import Path
import physarum_workbench
import pandas as pd
import matplotlib.pyplot as plt
from physarum_workbench.writers import read_pgm
datapath = Path(physarum_workbench.__file__).parent.parent.resolve() / "scripts" / "data" / "spanning_tree" / "seed_0"


# %%
trace = pd.read_csv(datapath / "trace.csv")
events = pd.read_csv(datapath / "events.csv")


# %%
fig, ax = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
ax[0].plot(trace['t'], trace['field_mass'])
for t in events.loc[events['event'] == 'suppressed', 't']:
    ax[0].axvline(t, color='r', lw=0.5)
ax[0].set_ylabel('Field mass')
ax[1].plot(trace['t'], trace['population'])
ax[1].set_ylabel('Population')
ax[1].set_xlabel('Step')

# %%
frames = sorted(datapath.glob("agents_*.pgm"))
fig, axes = plt.subplots(1, 4, figsize=(16, 4))
for ax, frame in zip(axes, frames[::max(1, len(frames) // 4)]):
    ax.imshow(read_pgm(frame), cmap='gray', origin='lower')
    ax.set_title(frame.stem)
