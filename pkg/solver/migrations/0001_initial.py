from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='SolveRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('instance', models.TextField()),
                ('solver', models.CharField(choices=[('foresight', 'Foresight'), ('fast', 'Fast')], default='fast', max_length=20)),
                ('outcome', models.CharField(choices=[('schedulable', 'Schedulable'), ('unschedulable', 'Unschedulable'), ('timeout', 'Timeout')], max_length=20)),
                ('schedule', models.TextField(blank=True, default='')),
                ('elapsed_ms', models.FloatField(default=0.0)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
        ),
    ]
