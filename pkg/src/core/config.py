# path: src/core/config.py
from typing import Literal

from pydantic import BaseModel
from pydantic_settings import BaseSettings, SettingsConfigDict


class SolverConfig(BaseModel):
    eq_tol: float = 1e-10                 # gradient equality tolerance inside a lingering radius
    checkpoint_fraction: float = 0.25     # record every n * fraction billed units
    min_epoch_len: int = 16
    mbar0: int = 100                      # SCSG-lin initial batch
    practical_m_base: int = 100
    practical_m_growth: float = 1.1
    practical_m_cap: int = 1000
    warmup_steps: int = 50
    reference_budget_factor: float = 10.0
    drift_rtol: float = 1e-9
    max_free_epochs: int = 100            # consecutive zero-billed epochs before a lingering run stops


class LpConfig(BaseModel):
    mu: float = 1e-5
    theta: float = 5.0
    soundness_theta: float = 20.0
    overflow_revenue: float = 0.05
    capacity_fraction: float = 0.01
    revenue_low: float = 0.05
    revenue_high: float = 0.95
    exact_opt_max_vars: int = 200_000


class SvmConfig(BaseModel):
    smoothing: float = 0.0
    zone_radius: Literal["infinite", "zero"] = "infinite"
    zero_label_as_negative: bool = False


class SuiteConfig(BaseModel):
    # desk-scale defaults; the full-size protocol is reachable through run configs
    lp_n: int = 20_000
    lp_d: int = 20
    lp_budget: float = 20.0
    lp_primal_budget: float = 10.0
    svm_budget: float = 35.0
    pegasos_budget: float = 90.0
    lp_grid_exponents: list[int] = [1, 2, 3, 4, 5]
    lp_grid_mantissas: list[float] = [1.0, 3.0, 5.0]
    svm_grid_exponents: list[int] = [1, 2, 3, 4, 5, 6]
    svm_grid_mantissas: list[float] = [1.0, 2.5, 5.0, 7.5]
    gaussian_sizes: list[int] = [1_000, 10_000]
    gaussian_d: int = 20
    gaussian_sigma: float = 1.0
    gaussian_kappa: float = 2.0
    gaussian_passes: float = 10.0
    rate_shape_n: int = 2_000
    rate_shape_d: int = 10
    rate_shape_epochs: int = 30
    profile_points: int = 41
    top_etas: int = 3                     # curves kept per method after tuning
    svm_smoothings: list[float] = [0.0, 0.01]


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=(".env.example", ".env"),
        case_sensitive=False,
        env_nested_delimiter="__",
        env_prefix="LINGER_",
        extra="ignore",
    )
    threads: int = 1
    solver: SolverConfig = SolverConfig()
    lp: LpConfig = LpConfig()
    svm: SvmConfig = SvmConfig()
    suite: SuiteConfig = SuiteConfig()


settings = Settings()
