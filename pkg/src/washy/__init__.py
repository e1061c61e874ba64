"""Solar-aware laundry scheduling with a tool-calling conversational agent.

The package recommends, books and automatically starts laundry cycles when
forecasted solar production is highest, operated through one of two chat
personas (a plain assistant or the personified washing machine) over a
pluggable language-model backend.
"""

__version__ = "0.1.0"
