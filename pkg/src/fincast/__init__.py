"""fincast: stock price forecasting from daily closes and news sentiment.

Pipeline: ingest prices and headlines, reduce headline classifications to a
daily sentiment scalar, cut rolling windows, train MLP / LSTM /
sentiment-fused LSTM models on a from-scratch neural core, and compare them
with MAE / MAPE / accuracy reports.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, DivergenceError, FincastError
from .ingest import (
    AlignedSeries,
    NewsDay,
    PriceBar,
    PriceSeries,
    align,
    fetch_prices,
    load_news,
    load_prices,
    write_news,
    write_prices,
)
from .sentiment import (
    DailySentiment,
    HeadlineFileProvider,
    HeadlineSentiment,
    LexiconProvider,
    RemoteProvider,
    aggregate_day,
    load_sentiment_csv,
    score_headlines,
    signed_score,
    write_sentiment_csv,
)
from .preprocess import (
    Sample,
    Scaler,
    SplitDataset,
    WindowedDataset,
    attach_sentiment,
    build_dataset,
    denormalize,
    fit_scaler,
    make_windows,
    normalize,
    split,
)
from .models import (
    MODEL_KINDS,
    ModelSpec,
    TrainConfig,
    TrainedModel,
    build,
    predict,
    train,
)
from .evaluate import (
    ComparisonReport,
    MetricSet,
    accuracy,
    emit_report,
    mae,
    mape,
    relative_improvement,
    run_trials,
)
