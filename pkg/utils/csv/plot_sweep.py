import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt

from utils.csv.save_csv import load_sweep_csv

LINE_STYLES = {
    'closed': 'solid',
    'linear': 'solid',
    'exact': 'dashdot',
    'conventional': 'dotted',
    'gaussian': 'dashed',
}


def _method(column):
    for method in LINE_STYLES:
        if f"_{method}" in column:
            return method
    return None


def plot_sweep(csv_path, output_image_path, title=None):
    """Fraction curves against mu1: solid closed/linear, dotted conventional, dashed gaussian."""
    sweep = load_sweep_csv(csv_path)

    plt.figure(figsize=(10, 7))
    for column in sweep.columns[1:]:
        plt.plot(sweep['mu1'], sweep[column], label=column, linestyle=LINE_STYLES.get(_method(column), 'solid'))

    plt.legend(fontsize='small')
    plt.xlabel('Growth rate mu1')
    plt.ylabel('Kelly fraction')
    plt.title(title or 'Kelly fractions versus growth')
    plt.grid(True)
    plt.tight_layout()

    try:
        plt.savefig(output_image_path, dpi=100)
    finally:
        plt.close()
    print(f"Sweep plot saved to {output_image_path}")
