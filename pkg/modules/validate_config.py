#!/usr/bin/env python3
"""
Configuration validation script for the convolution engine.
Run this script to check your settings and dependencies before running the CLI:

    python -m modules.validate_config
"""
import platform
import sys
from typing import Any, Dict, List, Tuple

from dotenv import load_dotenv

REQUIRED_PACKAGES: List[Tuple[str, str]] = [
    ("numpy", "numpy"),
    ("scipy", "scipy"),
    ("pydantic", "pydantic"),
    ("python-dotenv", "dotenv"),
    ("psutil", "psutil"),
]


def check_packages() -> List[str]:
    """Return the names of required packages that fail to import."""
    missing = []
    for package_name, import_name in REQUIRED_PACKAGES:
        try:
            __import__(import_name)
            print(f"   ✅ {package_name}")
        except ImportError:
            print(f"   ❌ {package_name} - Not installed")
            missing.append(package_name)
    return missing


def get_system_info() -> Dict[str, Any]:
    """Python version, platform and available memory."""
    info: Dict[str, Any] = {
        "python_version": sys.version.split()[0],
        "platform": platform.platform(),
    }
    try:
        import psutil
        info["available_memory_mb"] = psutil.virtual_memory().available // (1024 * 1024)
    except ImportError:
        info["available_memory_mb"] = None
    return info


def main() -> int:
    """Main validation function."""
    print("🔍 Engine Configuration Validator")
    print("=" * 60)

    load_dotenv()

    print("\n📋 Validating OVFREE_* settings...")
    config_ok = True
    try:
        from modules.config import EngineConfig
        settings = EngineConfig()
        print("✅ Settings are valid!")
        for key, value in settings.as_dict().items():
            print(f"     {key}: {value}")
    except ValueError as e:
        print(f"❌ Invalid setting: {e}")
        config_ok = False
    except ImportError as e:
        print(f"❌ Cannot load settings: {e}")
        config_ok = False

    print("\n📦 Checking Python Dependencies...")
    missing_packages = check_packages()
    if missing_packages:
        print(f"\n   Missing packages: {', '.join(missing_packages)}")
        print("   Run: pip install -r requirements.txt")

    print("\n🖥️  System Information...")
    sys_info = get_system_info()
    print(f"   Python Version: {sys_info['python_version']}")
    print(f"   Platform: {sys_info['platform']}")
    if sys_info["available_memory_mb"] is not None:
        print(f"   Available Memory: {sys_info['available_memory_mb']} MB")

    print("\n" + "=" * 60)
    if config_ok and not missing_packages:
        print("🎉 Configuration validation PASSED!")
        print("   Execute: python main.py verify --suite all")
        return 0

    print("⚠️  Configuration validation FAILED!")
    if not config_ok:
        print("   - Fix the OVFREE_* values in your .env file")
    if missing_packages:
        print("   - Install missing Python packages")
    return 1


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
