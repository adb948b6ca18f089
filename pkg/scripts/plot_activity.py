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
datapath = Path(physarum_workbench.__file__).parent.parent.resolve() / "scripts" / "data" / "actin"


# %%
activity = pd.read_csv(datapath / "c3_activity.csv")


# %%
plt.plot(activity['step'], activity['excited_x'], label='chain x')
plt.plot(activity['step'], activity['excited_y'], label='chain y')
plt.xlabel('Step')
plt.ylabel('Excited nodes')
plt.legend()

# %%
# generation frequency over the settled part of the run
settled = activity[activity['step'] >= 500]
print(settled[['excited_x', 'excited_y']].mean())

# %%
fig, axes = plt.subplots(1, 2, figsize=(10, 6))
for ax, chain in zip(axes, ['x', 'y']):
    ax.imshow(read_pgm(datapath / f"c3_{chain}.pgm")[:300], cmap='gray', aspect='auto', interpolation='nearest')
    ax.set_title(f'C3 chain {chain}')
    ax.set_xlabel('Node')
axes[0].set_ylabel('Step')
