from dotenv import load_dotenv
# Load environment variables first to ensure all configs are set
load_dotenv()

from app import create_app


# Create the command-line application using the app factory pattern
cli = create_app()

if __name__ == "__main__":
    cli(prog_name="dcgen")
