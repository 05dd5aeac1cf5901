"""
System Verification Script for zenotrap
Checks Python, dependencies, package layout and a quick numerical smoke run
"""
import os
import sys
from pathlib import Path


def print_header(text):
    print("\n" + "=" * 60)
    print(f"  {text}")
    print("=" * 60 + "\n")


def print_check(text, status):
    symbol = "✅" if status else "❌"
    print(f"{symbol} {text}")


def check_python_version():
    """Check Python version"""
    version = sys.version_info
    is_ok = version.major >= 3 and version.minor >= 9
    print_check(f"Python {version.major}.{version.minor}.{version.micro}", is_ok)
    return is_ok


def check_dependencies():
    """Check if Python dependencies are installed"""
    required = {
        "numpy": "numpy",
        "scipy": "scipy",
        "pydantic": "pydantic",
        "python-dotenv": "dotenv",
        "tqdm": "tqdm",
        "pytest": "pytest",
    }

    all_ok = True
    for package, module in required.items():
        try:
            __import__(module)
            print_check(f"Paquete: {package}", True)
        except ImportError:
            print_check(f"Paquete: {package} (no instalado)", False)
            all_ok = False

    return all_ok


def check_directory_structure():
    """Check if directory structure is correct"""
    required_dirs = [
        "zenotrap/core",
        "zenotrap/models",
        "zenotrap/utils",
        "tests",
    ]

    all_ok = True
    for dir_path in required_dirs:
        exists = Path(dir_path).exists()
        print_check(f"Directorio: {dir_path}", exists)
        if not exists:
            all_ok = False

    return all_ok


def check_env_file():
    """Report the optional .env settings"""
    exists = Path(".env").exists()
    try:
        from dotenv import load_dotenv
        load_dotenv()
    except ImportError:
        print_check(".env file (python-dotenv no instalado)", False)
        return False
    level = os.getenv("ZENOTRAP_LOG_LEVEL", "WARNING")
    print_check(f".env file ({'encontrado' if exists else 'opcional, no encontrado'}; log level {level})", True)
    return True


def check_complex_erf():
    """Erf complejo frente a scipy.special.erf"""
    try:
        from scipy.special import erf

        from zenotrap.core.special import complex_erf

        z = 3.0 - 2.0j
        is_ok = abs(complex_erf(z) - erf(z)) < 1e-11
        print_check("Erf complejo (comparado con scipy)", is_ok)
        return is_ok
    except Exception as e:
        print_check(f"Erf complejo (error: {str(e)[:40]}...)", False)
        return False


def check_zeno_time():
    """t_Z/t0 del primer nivel"""
    try:
        from zenotrap.core.analytic import zeno_time
        from zenotrap.models.models import TrapConfig

        t_z = zeno_time(1, TrapConfig()).t_Z
        is_ok = abs(t_z - 0.4171) < 1e-3
        print_check(f"Tiempo de Zeno t_Z/t0 = {t_z:.4f}", is_ok)
        return is_ok
    except Exception as e:
        print_check(f"Tiempo de Zeno (error: {str(e)[:40]}...)", False)
        return False


def check_tdse_smoke():
    """Propagación corta en una rejilla gruesa: norma conservada"""
    try:
        from zenotrap.core.grid import make_grid
        from zenotrap.core.tdse import OpenTrapEvolver, prepare_states, survival_numeric
        from zenotrap.models.models import TrapConfig

        config = TrapConfig.hard_wall(length=3.0)
        grid = make_grid(config, 1501)
        psi0 = prepare_states(grid, config, 1)[0]
        (psi_t,) = OpenTrapEvolver(grid, config).advance([psi0], 0.0, 1e-4)
        drift = abs(psi_t.norm_sq - psi0.norm_sq)
        is_ok = drift < 1e-9 and survival_numeric(psi0, psi_t) < 1.0
        print_check(f"TDSE (deriva de norma {drift:.1e})", is_ok)
        return is_ok
    except Exception as e:
        print_check(f"TDSE (error: {str(e)[:40]}...)", False)
        return False


def print_summary(results):
    """Print summary of checks"""
    print_header("Resumen")

    total = len(results)
    passed = sum(results.values())
    failed = total - passed

    print(f"Total de verificaciones: {total}")
    print(f"✅ Pasadas: {passed}")
    print(f"❌ Fallidas: {failed}")
    print()

    if failed == 0:
        print("🎉 ¡Todo está configurado correctamente!")
        print("Ejecuta 'python -m zenotrap print-config' para ver la configuración por defecto")
    else:
        print("⚠️  Hay problemas que necesitan atención")
        print("Ejecuta 'pip install -r requirements.txt' para instalar las dependencias")


def main():
    print_header("zenotrap System Verification")

    results = {}

    print_header("Verificando Sistema")
    results["Python"] = check_python_version()
    results[".env file"] = check_env_file()

    print_header("Verificando Dependencias")
    results["Dependencies"] = check_dependencies()

    print_header("Verificando Estructura")
    results["Directories"] = check_directory_structure()

    print_header("Verificando Numérica")
    results["Complex Erf"] = check_complex_erf()
    results["Zeno time"] = check_zeno_time()
    results["TDSE"] = check_tdse_smoke()

    print_summary(results)
    return 0 if all(results.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
