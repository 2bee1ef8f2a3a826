import matplotlib.pyplot as plt

from gtseg.model.complexity import complexity, complexity_table


def run_phi_sweep(height=64, width=64, channels=64, group=8):
    table = complexity_table(height, width, channels, group, group, [1, 2, 4, 8])

    print(f"Grouped attention cost on a {height}x{width}x{channels} map, {group}x{group} groups\n")
    print(table[["phi", "omega_gt_total", "omega_mhsa", "ratio"]].to_string(index=False))
    return table


def run_size_sweep(channels=64, group=8, phi=2):
    sizes = [16, 32, 64, 128, 256]
    ratios = []

    print("\nCost ratio against global MHSA as the map grows...\n")

    for size in sizes:
        report = complexity(size, size, channels, group, group, phi)
        ratios.append(report.ratio)
        print(
            f"Map: {size:>3}x{size:<3} | "
            f"MHSA: {report.omega_mhsa:>14,} | "
            f"GT: {report.omega_gt_total:>12,} | "
            f"ratio: {report.ratio:.5f}"
        )
    return sizes, ratios


def main():
    table = run_phi_sweep()
    sizes, ratios = run_size_sweep()

    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    left.plot(table["phi"], table["ratio"], marker="o")
    left.set_xscale("log", base=2)
    left.set_xlabel("Bottleneck factor phi")
    left.set_ylabel("GT / MHSA MACs")
    left.set_title("Channel bottleneck")
    left.grid(True)

    right.plot(sizes, ratios, marker="o")
    right.set_xscale("log", base=2)
    right.set_yscale("log")
    right.set_xlabel("Feature map side")
    right.set_ylabel("GT / MHSA MACs")
    right.set_title("Spatial grouping")
    right.grid(True)

    fig.tight_layout()
    plt.show()


if __name__ == "__main__":
    main()
