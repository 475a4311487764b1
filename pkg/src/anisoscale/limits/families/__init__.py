from .base import LimitFamily, BOX, INDICATOR, PREFACTOR
from .y1 import Y1
from .y2 import Y2
from .y3 import Y3
from .y12 import Y12
from .y23 import Y23
from .y0 import Y0

FAMILIES = {
    Y1.family_id: Y1(),
    Y2.family_id: Y2(),
    Y3.family_id: Y3(),
    Y12.family_id: Y12(),
    Y23.family_id: Y23(),
    Y0.family_id: Y0(),
}
