"""Posted-price selling of locally public goods on networks.

Agents sit on a graph and each buys a good that benefits its neighbors
too. The package finds threshold equilibria for posted prices, recommends
prices with revenue guarantees, computes worst-case equilibrium revenue
for uniform values, analyses sequential sales and simulates play.
"""

from .distributions import (
    DistributionError,
    ValueDistribution,
    exponential,
    myerson_reserve,
    myerson_revenue_n,
    parse_distribution,
    prophet_price,
    quantile,
    tabulated,
    uniform,
    virtual_value,
)
from .equilibrium import (
    NEVER_BUY,
    ThresholdVector,
    expected_revenue,
    solve_fixed_point,
    symmetric_threshold,
    verify_equilibrium,
)
from .graphs import Graph, clique, cycle, from_edges, generate, load_graph, save_graph
from .pricing import price_clique, price_d_regular, price_uniform_general
from .sequential import clique_subgame_perfect, live_set
from .simulation import simulate
from .worstcase import min_sum_x, worst_case_revenue_bounds, worst_case_revenue_exact

__version__ = "0.1.0"
