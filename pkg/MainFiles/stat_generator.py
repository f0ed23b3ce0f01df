from typing import Dict, Any


class StatGenerator:
    """
    Class to track scan statistics across primes and families.
    """

    def __init__(self):
        """
        Initialize every counter at zero.
        """
        self.scans_total: int = 0
        self.fibres_total: int = 0
        self.fibres_max: int = 0  # Largest single scan
        self.curves_counted: int = 0  # Fibres counted afresh, not read from the cache
        self.cache_hits: int = 0
        self.cache_misses: int = 0
        self.singular_fibres_total: int = 0
        self.trace_abs_max: int = 0
        self.fits_total: int = 0

    def reset_current_stats(self) -> None:
        """
        Mark the start of a new scan.
        """
        self.scans_total += 1

    def update_fibres(self, fibres: int) -> None:
        """
        Update the total and maximum number of fibres scanned.

        :param fibres: The number of fibres in the current scan.
        """
        self.fibres_total += fibres
        if fibres > self.fibres_max:
            self.fibres_max = fibres

    def update_cache(self, hits: int, misses: int) -> None:
        """
        Update cache hit and miss counts; every miss is a freshly counted curve.

        :param hits: Fibres whose counts came from the cache.
        :param misses: Fibres counted in this scan.
        """
        self.cache_hits += hits
        self.cache_misses += misses
        self.curves_counted += misses

    def update_singular(self, singular: int) -> None:
        self.singular_fibres_total += singular

    def update_trace_bound(self, trace: int) -> None:
        """
        Track the largest |a| over F_p-nonsingular fibres; callers skip singular ones.

        :param trace: A Frobenius trace.
        """
        if abs(trace) > self.trace_abs_max:
            self.trace_abs_max = abs(trace)

    def update_fits(self) -> None:
        self.fits_total += 1

    def get_cache_hit_ratio(self) -> float:
        """
        Calculate the share of fibres served from the cache.

        :return: The ratio, or 0 if nothing was scanned.
        """
        lookups = self.cache_hits + self.cache_misses
        if lookups == 0:
            return 0.0
        return self.cache_hits / lookups

    def get_performance_stats_summary(self) -> Dict[str, Any]:
        """
        Generate a summary of the scan statistics.

        :return: A dictionary containing the summary.
        """
        stats_summary = {
            "scans_total": self.scans_total,
            "fibres_total": self.fibres_total,
            "fibres_avg": self.fibres_total / self.scans_total if self.scans_total > 0 else 0,
            "fibres_max": self.fibres_max,
            "curves_counted": self.curves_counted,
            "cache_hits": self.cache_hits,
            "cache_misses": self.cache_misses,
            "cache_hit_ratio": self.get_cache_hit_ratio(),
            "singular_fibres_total": self.singular_fibres_total,
            "trace_abs_max": self.trace_abs_max,
            "fits_total": self.fits_total,
        }
        return stats_summary

    def reset_stats(self) -> None:
        """
        Reset all statistics to their initial values.
        """
        self.scans_total = 0
        self.fibres_total = 0
        self.fibres_max = 0
        self.curves_counted = 0
        self.cache_hits = 0
        self.cache_misses = 0
        self.singular_fibres_total = 0
        self.trace_abs_max = 0
        self.fits_total = 0
