from typing import Callable

# callback(stage label, completed fraction in [0, 1]); used for k ranges, n grids and dimension fits
ProgressCallbackType = Callable[[str, float], None]
