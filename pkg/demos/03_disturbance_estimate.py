# Recovering the unknown disturbance with one extra observer state.
#
# The extended observer treats the disturbance as a state x3 = d and
# estimates it along with x1 and x2.  After the prescribed time T = 1 the
# estimate follows d(t) = 5 sin 2t to within integration error.
import numpy as np

from ptobs import ExtendedPtObserver, SimConfig, TimeScale, simulate
from ptobs.model import example1_system

obs = ExtendedPtObserver((6, 11, 6), TimeScale(T=1.0, m=0.1))
run = simulate(example1_system(), obs, [1, -1], [0, 0, 0], SimConfig(t_end=4.0, dt_base=1e-4, dt_min=1e-9))

print(f"{'t':>6} {'d':>10} {'dhat':>12} {'|d - dhat|':>12}")
for t in np.arange(0.0, 4.01, 0.25):
    i = run.at(t)
    print(f"{run.times[i]:6.2f} {run.d[i]:10.5f} {run.dhat[i]:12.5f} {abs(run.d[i] - run.dhat[i]):12.3e}")

tail = run.times >= 2.0
print("\nmax |d - dhat| on [2, 4]:", np.max(np.abs(run.d[tail] - run.dhat[tail])))
